#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace draftval {

inline constexpr int kMinPick = 1;
inline constexpr int kMaxPick = 256;
inline constexpr std::size_t kNumPicks = 256;
inline constexpr double kDefaultYBust = 0.005;

enum class Position : std::uint8_t { QB, WR, RB, TE, OT, IOL, DL, ED, LB, CB, S };
inline constexpr std::size_t kNumPositions = 11;

inline constexpr std::array<std::string_view, kNumPositions> kPositionLabels = {
    "QB", "WR", "RB", "TE", "OT", "IOL", "DL", "ED", "LB", "CB", "S"};

std::string_view position_label(Position p);
std::optional<Position> parse_position(std::string_view label);

struct PickRecord {
  int draft_year = 0;
  int draft_position = 0;
  Position position_group = Position::QB;
  double outcome_y = 0.0;
};

struct BundlePick {
  int pick_number = 0;
  int years_ahead = 0;
  friend bool operator==(const BundlePick&, const BundlePick&) = default;
};

// down_bundle: picks surrendered by the team trading down (contains the top pick);
// up_bundle: picks surrendered by the team trading up.
struct TradeRecord {
  int trade_year = 0;
  std::string trade_id;
  std::vector<BundlePick> down_bundle;
  std::vector<BundlePick> up_bundle;
};

struct CostTable {
  // compensation[x - 1][season] in dollars, four seasons per pick.
  std::vector<std::array<double, 4>> compensation;
  double base_cap_dollars = 0.0;
  double cap_growth_rate = 0.0;
};

using PickCurve = std::array<double, kNumPicks>;

// Input data failed validation (bad file, malformed row, schema violation).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace draftval
