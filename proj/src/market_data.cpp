#include "fnac/market_data.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <stdexcept>

#include "fnac/random.hpp"

namespace fnac {

// Howard Hinnant's civil-date algorithms.
std::int32_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<std::int32_t>(era * 146097 + static_cast<int>(doe) - 719468);
}

void civil_from_days(std::int32_t z, int& year, int& month, int& day) {
    z += 719468;
    const int era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int y = static_cast<int>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    month = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    year = y + (month <= 2);
}

int weekday_of(std::int32_t days) {
    // 1970-01-01 was a Thursday
    return static_cast<int>(((days % 7) + 7 + 3) % 7);
}

namespace {

// Accepts YYYY-MM-DDTHH:MM[:SS][Z]; returns unix seconds.
bool parse_iso_timestamp(const std::string& text, std::int64_t& out) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    const int n = std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d", &y, &mo, &d, &h, &mi, &s);
    if (n < 5) return false;
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 59)
        return false;
    out = static_cast<std::int64_t>(days_from_civil(y, mo, d)) * 86400 + h * 3600 + mi * 60 + s;
    return true;
}

struct RawRow {
    std::int64_t ts;
    double mid;
    double spread;
    std::size_t line;
};

}  // namespace

MarketSeries load_csv(const std::string& path, const CalendarWindow& window) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv: cannot open " + path);
    if (window.minutes != kEpisodeMinutes)
        throw std::invalid_argument("load_csv: window must cover exactly 600 minutes");

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw std::runtime_error("load_csv: empty file " + path);
    ++line_no;
    if (line.size() && line.back() == '\r') line.pop_back();
    if (line != "timestamp,mid,spread")
        throw std::runtime_error("load_csv: bad header at line 1, expected timestamp,mid,spread");

    std::vector<RawRow> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.size() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c2 == std::string::npos)
            throw std::runtime_error("load_csv: parse error at line " + std::to_string(line_no) +
                                     ": expected 3 columns");
        RawRow row{};
        row.line = line_no;
        if (!parse_iso_timestamp(line.substr(0, c1), row.ts))
            throw std::runtime_error("load_csv: parse error at line " + std::to_string(line_no) +
                                     ": bad timestamp");
        try {
            std::size_t used = 0;
            const std::string mid_s = line.substr(c1 + 1, c2 - c1 - 1);
            row.mid = std::stod(mid_s, &used);
            if (used != mid_s.size()) throw std::invalid_argument("trailing");
            const std::string spr_s = line.substr(c2 + 1);
            row.spread = std::stod(spr_s, &used);
            if (used != spr_s.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw std::runtime_error("load_csv: parse error at line " + std::to_string(line_no) +
                                     ": bad numeric field");
        }
        if (!(row.mid > 0.0) || !(row.spread >= 0.0) || !std::isfinite(row.mid) || !std::isfinite(row.spread))
            throw std::runtime_error("load_csv: parse error at line " + std::to_string(line_no) +
                                     ": mid must be > 0 and spread >= 0");
        rows.push_back(row);
    }

    // group by UTC day, preserving file order within a day
    std::map<std::int32_t, std::vector<RawRow>> by_day;
    for (const auto& r : rows) {
        const std::int32_t day = static_cast<std::int32_t>(r.ts >= 0 ? r.ts / 86400 : (r.ts - 86399) / 86400);
        by_day[day].push_back(r);
    }

    MarketSeries series;
    series.report.rows = rows.size();
    series.report.days_seen = by_day.size();

    for (const auto& [day, day_rows] : by_day) {
        for (std::size_t i = 1; i < day_rows.size(); ++i) {
            if (day_rows[i].ts <= day_rows[i - 1].ts)
                throw std::runtime_error("load_csv: validation error at line " +
                                         std::to_string(day_rows[i].line) +
                                         ": non-monotone timestamp within day");
        }
        const std::int64_t open_ts =
            static_cast<std::int64_t>(day) * 86400 + window.open_hour * 3600 + window.open_minute * 60;
        const std::int64_t close_ts = open_ts + static_cast<std::int64_t>(window.minutes) * 60;

        Episode ep;
        ep.date = day;
        ep.bars.reserve(kEpisodeBars);
        for (const auto& r : day_rows) {
            if (r.ts < open_ts || r.ts > close_ts) continue;
            ep.bars.push_back(MarketBar{r.ts, r.mid, r.spread});
        }
        bool complete = ep.bars.size() == static_cast<std::size_t>(kEpisodeBars);
        if (complete) {
            for (int i = 0; i < kEpisodeBars; ++i) {
                if (ep.bars[static_cast<std::size_t>(i)].timestamp != open_ts + static_cast<std::int64_t>(i) * 60) {
                    complete = false;
                    break;
                }
            }
        }
        if (complete) {
            series.report.days_complete += 1;
            series.episodes.push_back(std::move(ep));
        } else {
            series.report.days_skipped += 1;
        }
    }
    return series;
}

MarketSeries synthesize(const SyntheticSpec& spec, std::uint64_t seed) {
    if (!(spec.base_price > 0.0)) throw std::invalid_argument("synthesize: base_price must be > 0");
    if (spec.noise_std < 0.0) throw std::invalid_argument("synthesize: noise_std must be >= 0");
    if (spec.spread < 0.0) throw std::invalid_argument("synthesize: spread must be >= 0");
    if (spec.days < 1) throw std::invalid_argument("synthesize: days must be >= 1");

    rng::Stream stream(seed);
    MarketSeries series;
    series.episodes.reserve(static_cast<std::size_t>(spec.days));

    double price = spec.base_price;
    std::int32_t date = spec.start_date;
    for (int d = 0; d < spec.days; ++d) {
        while (weekday_of(date) > 4) ++date;  // trading happens Mon-Fri
        Episode ep;
        ep.date = date;
        ep.bars.reserve(kEpisodeBars);
        const std::int64_t open_ts = static_cast<std::int64_t>(date) * 86400 + 8 * 3600;
        for (int t = 0; t < kEpisodeBars; ++t) {
            ep.bars.push_back(MarketBar{open_ts + static_cast<std::int64_t>(t) * 60, price, spec.spread});
            if (t < kEpisodeMinutes) {
                const double drift =
                    spec.amplitude * std::sin(2.0 * std::numbers::pi * t / kEpisodeMinutes + spec.phase);
                const double noise = spec.noise_std > 0.0 ? spec.noise_std * stream.normal() : 0.0;
                price *= 1.0 + drift + noise;
                if (!(price > 0.0))
                    throw std::runtime_error("synthesize: price driven non-positive; lower noise/amplitude");
            }
        }
        series.episodes.push_back(std::move(ep));
        ++date;
    }
    series.report.rows = series.episodes.size() * static_cast<std::size_t>(kEpisodeBars);
    series.report.days_seen = series.episodes.size();
    series.report.days_complete = series.episodes.size();
    return series;
}

void write_csv(const MarketSeries& series, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path);
    out << "timestamp,mid,spread\n";
    char buf[96];
    for (const auto& ep : series.episodes) {
        for (const auto& bar : ep.bars) {
            const std::int64_t ts = bar.timestamp;
            const std::int32_t day = static_cast<std::int32_t>(ts / 86400);
            int y, mo, d;
            civil_from_days(day, y, mo, d);
            const int sec = static_cast<int>(ts % 86400);
            std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ,%.17g,%.17g", y, mo, d,
                          sec / 3600, (sec % 3600) / 60, sec % 60, bar.mid, bar.spread);
            out << buf << '\n';
        }
    }
}

TradingState build_state(const Episode& episode, int t, double allocation) {
    if (episode.bars.size() != static_cast<std::size_t>(kEpisodeBars))
        throw std::invalid_argument("build_state: episode must hold exactly 601 bars");
    if (t < kWarmupMinutes || t > kEpisodeMinutes)
        throw std::out_of_range("build_state: minute index " + std::to_string(t) + " out of range");
    if (allocation < -1.0 || allocation > 1.0)
        throw std::invalid_argument("build_state: allocation outside [-1, 1]");

    TradingState s;
    for (int n = 0; n < kDeltaWindow; ++n) {
        const double p1 = episode.bars[static_cast<std::size_t>(t - n)].mid;
        const double p0 = episode.bars[static_cast<std::size_t>(t - n - 1)].mid;
        s.deltas[static_cast<std::size_t>(n)] = (p1 - p0) / p0;
    }
    s.spread = episode.bars[static_cast<std::size_t>(t)].spread;
    s.weekday = weekday_of(episode.date);
    s.minute = t;
    s.allocation = allocation;
    return s;
}

}  // namespace fnac
