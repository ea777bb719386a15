#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace fnac {

// One trading day: a 600-minute window plus the closing bar.
constexpr int kEpisodeMinutes = 600;
constexpr int kEpisodeBars = kEpisodeMinutes + 1;

// Number of trailing one-minute relative price moves kept in the state.
constexpr int kDeltaWindow = 45;

// deltas + spread + weekday + minute + allocation
constexpr int kStateDim = kDeltaWindow + 4;

// First minute with a full same-day delta history. Earlier minutes are
// observation warm-up: the agent holds Flat and no decisions are recorded.
constexpr int kWarmupMinutes = kDeltaWindow;

// Feature indices in the canonical state layout.
constexpr int kFeatSpread = kDeltaWindow;
constexpr int kFeatWeekday = kDeltaWindow + 1;
constexpr int kFeatMinute = kDeltaWindow + 2;
constexpr int kFeatAllocation = kDeltaWindow + 3;

struct MarketBar {
    std::int64_t timestamp = 0;  // unix seconds, UTC, minute resolution
    double mid = 0.0;            // > 0
    double spread = 0.0;         // bid-ask spread, >= 0
};

struct Episode {
    std::int32_t date = 0;  // days since 1970-01-01 (UTC)
    std::vector<MarketBar> bars;  // exactly kEpisodeBars, 1-minute spacing
};

struct LoadReport {
    std::size_t rows = 0;
    std::size_t days_seen = 0;
    std::size_t days_complete = 0;
    std::size_t days_skipped = 0;
};

struct MarketSeries {
    std::vector<Episode> episodes;  // date-ordered
    LoadReport report;
};

// Agent observation. `minute` is minutes since episode open; the value
// kEpisodeMinutes (600) marks the closing bar of the forced-close record.
struct TradingState {
    std::array<double, kDeltaWindow> deltas{};  // deltas[n] = (p_{t-n} - p_{t-n-1}) / p_{t-n-1}
    double spread = 0.0;
    int weekday = 0;  // 0 = Monday .. 6 = Sunday
    int minute = 0;
    double allocation = 0.0;  // in [-1, 1]

    std::array<double, kStateDim> features() const {
        std::array<double, kStateDim> f{};
        for (int n = 0; n < kDeltaWindow; ++n) f[static_cast<std::size_t>(n)] = deltas[static_cast<std::size_t>(n)];
        f[kFeatSpread] = spread;
        f[kFeatWeekday] = static_cast<double>(weekday);
        f[kFeatMinute] = static_cast<double>(minute);
        f[kFeatAllocation] = allocation;
        return f;
    }
};

// Intraday window an episode must cover, e.g. 08:00 + 600 minutes.
struct CalendarWindow {
    int open_hour = 8;
    int open_minute = 0;
    int minutes = kEpisodeMinutes;
};

// Synthetic market: p_{t+1} = p_t * (1 + drift(t) + noise), with
// drift(t) = amplitude * sin(2*pi*t/600 + phase) and noise ~ N(0, noise_std^2).
// The planted minute-of-day pattern gives the critic a recoverable signal and
// the DP oracle a profitable optimum.
struct SyntheticSpec {
    double base_price = 1.0;
    double noise_std = 0.0;
    double amplitude = 0.0;
    double phase = 0.0;
    double spread = 0.0;
    int days = 1;
    std::int32_t start_date = 18995;  // 2022-01-03, a Monday
};

// days since epoch <-> civil date helpers
std::int32_t days_from_civil(int year, int month, int day);
void civil_from_days(std::int32_t days, int& year, int& month, int& day);
int weekday_of(std::int32_t days);  // 0 = Monday

// Parses `timestamp,mid,spread` CSV rows (ISO-8601 UTC timestamps) and keeps
// only days with a complete window; incomplete days are counted in the report.
MarketSeries load_csv(const std::string& path, const CalendarWindow& window = {});

MarketSeries synthesize(const SyntheticSpec& spec, std::uint64_t seed);

void write_csv(const MarketSeries& series, const std::string& path);

// Observation at minute t of an episode, t in [kWarmupMinutes, kEpisodeMinutes].
TradingState build_state(const Episode& episode, int t, double allocation);

}  // namespace fnac
