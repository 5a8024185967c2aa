#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssrd {

/// Raised for malformed or inconsistent user inputs.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Dates
// ---------------------------------------------------------------------------

struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    friend bool operator==(const Date&, const Date&) = default;
    friend auto operator<=>(const Date&, const Date&) = default;
};

inline bool is_leap_year(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

inline int days_in_month(int y, int m) {
    static constexpr int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    return (m == 2 && is_leap_year(y)) ? 29 : days[m - 1];
}

/// Days since 1970-01-01 (proleptic Gregorian).
inline long serial_day(const Date& d) {
    const int y = d.year - (d.month <= 2 ? 1 : 0);
    const long era = (y >= 0 ? y : y - 399) / 400;
    const long yoe = y - era * 400;
    const long mp = (d.month + 9) % 12;
    const long doy = (153 * mp + 2) / 5 + d.day - 1;
    const long doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + doe - 719468;
}

inline Date add_months(const Date& d, int months) {
    int total = d.year * 12 + (d.month - 1) + months;
    Date r;
    r.year = total / 12;
    r.month = total % 12 + 1;
    r.day = std::min(d.day, days_in_month(r.year, r.month));
    return r;
}

inline Date parse_date(const std::string& text) {
    Date d;
    char dash1 = 0, dash2 = 0;
    std::istringstream in(text);
    if (!(in >> d.year >> dash1 >> d.month >> dash2 >> d.day) || dash1 != '-' || dash2 != '-' || d.month < 1 ||
        d.month > 12 || d.day < 1 || d.day > days_in_month(d.year, d.month))
        throw InputError("invalid date '" + text + "' (expected YYYY-MM-DD)");
    return d;
}

inline std::string format_date(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
    return buf;
}

enum class DayCount { act360, act365f, thirty360 };

inline double year_fraction(const Date& a, const Date& b, DayCount dc) {
    switch (dc) {
        case DayCount::act360: return double(serial_day(b) - serial_day(a)) / 360.0;
        case DayCount::act365f: return double(serial_day(b) - serial_day(a)) / 365.0;
        case DayCount::thirty360: {
            const int d1 = std::min(a.day, 30);
            const int d2 = (b.day == 31 && d1 == 30) ? 30 : b.day;
            return (360.0 * (b.year - a.year) + 30.0 * (b.month - a.month) + (d2 - d1)) / 360.0;
        }
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// fixed: payments on fixed roll days; anniversary: valuation date plus k periods;
/// regular: dateless grid of k*frequency/12 year fractions.
enum class RollRule { fixed, anniversary, regular };

/// How derivative multipliers enter the correction operators.
/// characteristic: multipliers evaluated at the integration time, corrections transported
/// along the drift characteristics. frozen_multiplier: the literal component lists, with every
/// derivative multiplier evaluated at the valuation time.
enum class ExpansionScheme { characteristic, frozen_multiplier };

struct PricingConfig {
    double recovery = 0.4;
    int frequency_months = 6;
    RollRule roll = RollRule::fixed;
    int roll_day = 20;
    DayCount day_count = DayCount::act360;
    Date valuation{2024, 4, 8};
    int quad_nodes = 32;
    int order = 2;
    ExpansionScheme scheme = ExpansionScheme::characteristic;

    void validate() const {
        if (!(recovery >= 0.0) || !(recovery < 1.0)) throw InputError("recovery must be < 1 (and >= 0)");
        if (order < 0 || order > 2) throw InputError("expansion order must be 0, 1 or 2");
        if (quad_nodes < 8) throw InputError("quad_nodes must be >= 8");
        if (frequency_months < 1 || frequency_months > 12) throw InputError("frequency_months must be in [1, 12]");
        if (roll_day < 1 || roll_day > 28) throw InputError("roll_day must be in [1, 28]");
    }
};

inline std::string to_string(RollRule r) {
    switch (r) {
        case RollRule::fixed: return "fixed";
        case RollRule::anniversary: return "anniversary";
        case RollRule::regular: return "regular";
    }
    return "?";
}

inline std::string to_string(DayCount d) {
    switch (d) {
        case DayCount::act360: return "act360";
        case DayCount::act365f: return "act365f";
        case DayCount::thirty360: return "30_360";
    }
    return "?";
}

inline std::string to_string(ExpansionScheme s) {
    return s == ExpansionScheme::characteristic ? "characteristic" : "frozen_multiplier";
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& field, const std::string& where) {
    const std::string t = trim(field);
    double value = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw InputError("non-numeric field '" + t + "' in " + where);
    return value;
}

inline int parse_int(const std::string& field, const std::string& where) {
    const std::string t = trim(field);
    int value = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw InputError("non-integer field '" + t + "' in " + where);
    return value;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path);
    return in;
}

inline bool looks_numeric(const std::string& field) {
    const std::string t = trim(field);
    double v;
    auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    return !t.empty() && res.ec == std::errc();
}

inline std::string format_double_exact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

/// Flat key=value settings file. Unknown keys are kept for the caller.
inline std::map<std::string, std::string> read_key_values(const std::string& path) {
    auto in = detail::open_input(path);
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw InputError(path + ":" + std::to_string(lineno) + ": expected key=value");
        kv[detail::trim(t.substr(0, eq))] = detail::trim(t.substr(eq + 1));
    }
    return kv;
}

/// Applies recognised keys to cfg and removes them from kv.
inline void apply_config(PricingConfig& cfg, std::map<std::string, std::string>& kv) {
    auto take = [&](const char* key) -> std::optional<std::string> {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    if (auto v = take("recovery")) cfg.recovery = detail::parse_double(*v, "recovery");
    if (auto v = take("frequency_months")) cfg.frequency_months = detail::parse_int(*v, "frequency_months");
    if (auto v = take("roll")) {
        if (*v == "fixed") cfg.roll = RollRule::fixed;
        else if (*v == "anniversary") cfg.roll = RollRule::anniversary;
        else if (*v == "regular") cfg.roll = RollRule::regular;
        else throw InputError("unknown roll rule '" + *v + "'");
    }
    if (auto v = take("roll_day")) cfg.roll_day = detail::parse_int(*v, "roll_day");
    if (auto v = take("day_count")) {
        if (*v == "act360" || *v == "Actual/360") cfg.day_count = DayCount::act360;
        else if (*v == "act365f" || *v == "Actual/365F") cfg.day_count = DayCount::act365f;
        else if (*v == "30_360" || *v == "30/360") cfg.day_count = DayCount::thirty360;
        else throw InputError("unknown day count '" + *v + "'");
    }
    if (auto v = take("valuation_date")) cfg.valuation = parse_date(*v);
    if (auto v = take("quad_nodes")) cfg.quad_nodes = detail::parse_int(*v, "quad_nodes");
    if (auto v = take("order")) cfg.order = detail::parse_int(*v, "order");
    if (auto v = take("scheme")) {
        if (*v == "characteristic") cfg.scheme = ExpansionScheme::characteristic;
        else if (*v == "frozen_multiplier") cfg.scheme = ExpansionScheme::frozen_multiplier;
        else throw InputError("unknown expansion scheme '" + *v + "'");
    }
}

// ---------------------------------------------------------------------------
// Discount curve
// ---------------------------------------------------------------------------

struct CurvePoint {
    double tenor;
    double discount_factor;
};

class DiscountCurve {
public:
    DiscountCurve() = default;
    explicit DiscountCurve(std::vector<CurvePoint> points) : points_(std::move(points)) {
        std::sort(points_.begin(), points_.end(), [](auto& a, auto& b) { return a.tenor < b.tenor; });
        validate();
    }

    const std::vector<CurvePoint>& points() const { return points_; }
    std::size_t size() const { return points_.size(); }

    void save_csv(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw InputError("cannot write file: " + path);
        out << "# mode=df\n";
        for (const auto& p : points_)
            out << detail::format_double_exact(p.tenor) << ',' << detail::format_double_exact(p.discount_factor) << '\n';
    }

private:
    void validate() const {
        if (points_.empty()) throw InputError("no curve points");
        for (std::size_t i = 0; i < points_.size(); ++i) {
            const auto& p = points_[i];
            if (!(p.tenor >= 0.0) || !std::isfinite(p.tenor)) throw InputError("curve tenor must be >= 0");
            if (!(p.discount_factor > 0.0)) throw InputError("discount factor must be > 0");
            if (p.discount_factor > 1.5) throw InputError("discount factor above 1.5");
            if (i > 0 && p.tenor == points_[i - 1].tenor) throw InputError("duplicate tenor");
        }
    }

    std::vector<CurvePoint> points_;
};

enum class CurveMode { rate, df };

/// Loads `tenor_years,value` rows. A `# mode=rate|df` line selects the interpretation;
/// zero rates use continuous compounding. `mode` overrides the file header when given.
inline DiscountCurve load_discount_curve(const std::string& path, std::optional<CurveMode> mode = std::nullopt) {
    auto in = detail::open_input(path);
    CurveMode file_mode = CurveMode::df;
    std::vector<CurvePoint> pts;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        if (t[0] == '#') {
            const auto pos = t.find("mode=");
            if (pos != std::string::npos) {
                const std::string m = detail::trim(t.substr(pos + 5));
                if (m == "rate") file_mode = CurveMode::rate;
                else if (m == "df") file_mode = CurveMode::df;
                else throw InputError(path + ": unknown curve mode '" + m + "'");
            }
            continue;
        }
        const auto fields = detail::split(t, ',');
        if (pts.empty() && !fields.empty() && !detail::looks_numeric(fields[0])) continue;  // column header
        if (fields.size() != 2) throw InputError(path + ":" + std::to_string(lineno) + ": expected tenor_years,value");
        const std::string where = path + ":" + std::to_string(lineno);
        pts.push_back({detail::parse_double(fields[0], where), detail::parse_double(fields[1], where)});
    }
    if (pts.empty()) throw InputError("no curve points");
    const CurveMode m = mode.value_or(file_mode);
    if (m == CurveMode::rate)
        for (auto& p : pts) p.discount_factor = std::exp(-p.discount_factor * p.tenor);
    return DiscountCurve(std::move(pts));
}

// ---------------------------------------------------------------------------
// CDS quotes
// ---------------------------------------------------------------------------

struct CdsQuote {
    double tenor;
    double bid_bps;
    double ask_bps;
    double mid_bps;
};

struct CdsQuoteSet {
    std::vector<CdsQuote> quotes;
    std::string currency = "USD";
    Date valuation{2024, 4, 8};

    std::vector<double> tenors() const {
        std::vector<double> t;
        for (auto& q : quotes) t.push_back(q.tenor);
        return t;
    }
    std::vector<double> mids_bps() const {
        std::vector<double> m;
        for (auto& q : quotes) m.push_back(q.mid_bps);
        return m;
    }

    void validate() const {
        for (std::size_t i = 0; i < quotes.size(); ++i) {
            const auto& q = quotes[i];
            if (!(q.tenor > 0.0)) throw InputError("quote tenor must be > 0");
            if (!(q.bid_bps >= 0.0)) throw InputError("bid must be >= 0");
            if (!(q.ask_bps >= q.bid_bps)) throw InputError("ask must be >= bid");
            if (q.bid_bps < q.ask_bps) {
                if (q.mid_bps < q.bid_bps || q.mid_bps > q.ask_bps) throw InputError("mid outside [bid, ask]");
            } else if (q.mid_bps != q.bid_bps) {
                throw InputError("mid must equal bid when bid == ask");
            }
            if (i > 0 && !(q.tenor > quotes[i - 1].tenor)) throw InputError("quote tenors must be strictly increasing");
        }
    }
};

/// Builds a quote set where bid = ask = mid, as for model-only columns.
inline CdsQuoteSet quotes_from_mids(const std::vector<double>& tenors, const std::vector<double>& mids_bps) {
    CdsQuoteSet qs;
    for (std::size_t i = 0; i < tenors.size(); ++i) qs.quotes.push_back({tenors[i], mids_bps[i], mids_bps[i], mids_bps[i]});
    qs.validate();
    return qs;
}

inline CdsQuoteSet load_cds_quotes(const std::string& path) {
    auto in = detail::open_input(path);
    CdsQuoteSet qs;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto f = detail::split(t, ',');
        if (qs.quotes.empty() && !f.empty() && !detail::looks_numeric(f[0])) continue;
        const std::string where = path + ":" + std::to_string(lineno);
        if (f.size() != 3 && f.size() != 4) throw InputError(where + ": expected tenor_years,bid_bps,ask_bps[,mid_bps]");
        CdsQuote q{};
        q.tenor = detail::parse_double(f[0], where);
        q.bid_bps = detail::parse_double(f[1], where);
        q.ask_bps = detail::parse_double(f[2], where);
        q.mid_bps = f.size() == 4 ? detail::parse_double(f[3], where) : 0.5 * (q.bid_bps + q.ask_bps);
        qs.quotes.push_back(q);
    }
    if (qs.quotes.empty()) throw InputError("no quotes in " + path);
    qs.validate();
    return qs;
}

// ---------------------------------------------------------------------------
// Premium schedule
// ---------------------------------------------------------------------------

class Schedule {
public:
    Schedule(std::vector<double> times, DayCount dc, std::optional<Date> valuation = std::nullopt,
             std::vector<Date> dates = {})
        : times_(std::move(times)), dates_(std::move(dates)), valuation_(valuation), day_count_(dc) {
        if (times_.empty()) throw InputError("empty schedule");
        double prev = 0.0;
        for (double t : times_) {
            if (!(t > prev)) throw InputError("schedule times must be strictly increasing and positive");
            prev = t;
        }
    }

    const std::vector<double>& times() const { return times_; }
    const std::vector<Date>& dates() const { return dates_; }
    std::optional<Date> valuation() const { return valuation_; }
    DayCount day_count() const { return day_count_; }
    double maturity() const { return times_.back(); }
    std::size_t size() const { return times_.size(); }

    /// t_i with t_0 = 0.
    double time(std::size_t i) const { return i == 0 ? 0.0 : times_[i - 1]; }
    double accrual(std::size_t i) const { return time(i) - time(i - 1); }

    /// N(s): 1-based index of the first payment time >= s, for s in (0, T].
    std::size_t period_index(double s) const {
        if (!(s > 0.0) || s > maturity()) throw std::out_of_range("period_index: s outside (0, T]");
        return static_cast<std::size_t>(std::lower_bound(times_.begin(), times_.end(), s) - times_.begin()) + 1;
    }

private:
    std::vector<double> times_;
    std::vector<Date> dates_;
    std::optional<Date> valuation_;
    DayCount day_count_;
};

inline Schedule build_schedule(const Date& valuation, double tenor_years, const PricingConfig& cfg) {
    if (!(tenor_years > 0.0)) throw InputError("maturity tenor must be > 0");
    const int freq = cfg.frequency_months;
    if (cfg.roll == RollRule::regular) {
        const double step = freq / 12.0;
        std::vector<double> times;
        for (int k = 1;; ++k) {
            const double t = k * step;
            if (t >= tenor_years - 1e-9) break;
            times.push_back(t);
        }
        times.push_back(tenor_years);
        return Schedule(std::move(times), cfg.day_count);
    }
    const double months_real = tenor_years * 12.0;
    const int months = static_cast<int>(std::lround(months_real));
    if (std::abs(months_real - months) > 1e-6 || months <= 0)
        throw InputError("dated schedules need a whole number of months");
    std::vector<Date> dates;
    if (cfg.roll == RollRule::anniversary) {
        if (12 % freq != 0) throw InputError("frequency must divide a year in anniversary mode");
        for (int k = freq; k < months; k += freq) dates.push_back(add_months(valuation, k));
        dates.push_back(add_months(valuation, months));
    } else {
        const Date target = add_months(valuation, months);
        // roll months are spaced by the frequency and anchored on December
        Date d{valuation.year, valuation.month, cfg.roll_day};
        while (true) {
            const bool roll_month = ((12 - d.month) % freq + freq) % freq == 0;
            if (roll_month && d > valuation) {
                dates.push_back(d);
                if (!(d < target)) break;
            }
            d = add_months(Date{d.year, d.month, 1}, 1);
            d.day = cfg.roll_day;
        }
    }
    std::vector<double> times;
    for (const auto& d : dates) times.push_back(year_fraction(valuation, d, cfg.day_count));
    return Schedule(std::move(times), cfg.day_count, valuation, std::move(dates));
}

}  // namespace ssrd
