#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "draftval/types.hpp"

namespace draftval {

struct RejectedRow {
  std::size_t line = 0;
  std::string reason;
};

template <class Record>
struct IngestResult {
  std::vector<Record> records;
  std::vector<RejectedRow> rejected;
};

// Rows with a non-modeled position (K, P, LS) or a pick past 256 are rejected
// and listed; structurally malformed rows throw DataError naming line and field.
IngestResult<PickRecord> parse_picks(std::istream& in, const std::string& source = "<stream>");
IngestResult<PickRecord> load_picks(const std::filesystem::path& path);

// Bundles are sorted by (years_ahead, pick_number). Throws DataError on an
// empty side or malformed row.
std::vector<TradeRecord> parse_trades(std::istream& in, const std::string& source = "<stream>");
std::vector<TradeRecord> load_trades(const std::filesystem::path& path);

CostTable parse_cost_table(std::istream& in, const std::string& source = "<stream>");
CostTable load_cost_table(const std::filesystem::path& path);

// Mean over the four seasons of compensation / projected cap, with the cap
// growing geometrically from base_cap_dollars.
PickCurve cost_curve(const CostTable& table);
std::array<double, 4> season_caps(const CostTable& table);

enum class BustFilter { none, above_cutoff, at_or_below_cutoff };

struct MomentSummary {
  double mean = 0.0;
  std::optional<double> sd;
  std::size_t count = 0;
};

// Per-pick sample mean/sd of Y, optionally restricted by the bust cutoff.
// Picks with no qualifying observations are omitted from the map.
std::map<int, MomentSummary> empirical_moments(const std::vector<PickRecord>& picks,
                                               BustFilter filter = BustFilter::none,
                                               double cutoff = kDefaultYBust);

}  // namespace draftval
