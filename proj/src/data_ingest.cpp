#include "draftval/data_ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <tuple>
#include <unordered_map>

namespace draftval {

std::string_view position_label(Position p) { return kPositionLabels[static_cast<std::size_t>(p)]; }

std::optional<Position> parse_position(std::string_view label) {
  for (std::size_t i = 0; i < kNumPositions; ++i) {
    if (kPositionLabels[i] == label) return static_cast<Position>(i);
  }
  return std::nullopt;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what) {
  throw DataError(source + ":" + std::to_string(line) + ": " + what);
}

int parse_int(std::string_view text, const std::string& source, std::size_t line, const char* field) {
  int v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || p != text.data() + text.size() || text.empty()) {
    fail(source, line, std::string("field '") + field + "': expected integer, got '" + std::string(text) + "'");
  }
  return v;
}

double parse_double(std::string_view text, const std::string& source, std::size_t line, const char* field) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || p != text.data() + text.size() || text.empty() || !std::isfinite(v)) {
    fail(source, line, std::string("field '") + field + "': expected number, got '" + std::string(text) + "'");
  }
  return v;
}

// Reads the header line (skipping a UTF-8 BOM) and checks it against `expected`.
void expect_header(std::istream& in, std::string& line, std::size_t& lineno, const std::string& source,
                   std::string_view expected) {
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view v = line;
    if (lineno == 1 && v.substr(0, 3) == "\xEF\xBB\xBF") v.remove_prefix(3);
    v = trim(v);
    if (v.empty()) continue;
    if (v != expected) fail(source, lineno, "expected header '" + std::string(expected) + "'");
    return;
  }
  fail(source, lineno, "missing header");
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

bool is_non_modeled(std::string_view label) { return label == "K" || label == "P" || label == "LS"; }

}  // namespace

IngestResult<PickRecord> parse_picks(std::istream& in, const std::string& source) {
  IngestResult<PickRecord> out;
  std::string line;
  std::size_t lineno = 0;
  expect_header(in, line, lineno, source, "draft_year,draft_position,position_group,outcome_y");
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto f = split(line);
    if (f.size() != 4) fail(source, lineno, "expected 4 fields, got " + std::to_string(f.size()));
    PickRecord r;
    r.draft_year = parse_int(f[0], source, lineno, "draft_year");
    r.draft_position = parse_int(f[1], source, lineno, "draft_position");
    r.outcome_y = parse_double(f[3], source, lineno, "outcome_y");
    if (r.draft_position < kMinPick) {
      fail(source, lineno, "field 'draft_position': " + std::to_string(r.draft_position) + " is below 1");
    }
    if (r.outcome_y < 0.0 || r.outcome_y > 1.0) {
      fail(source, lineno, "field 'outcome_y': value outside [0,1]");
    }
    if (is_non_modeled(f[2])) {
      out.rejected.push_back({lineno, "non-modeled position " + std::string(f[2])});
      continue;
    }
    auto pos = parse_position(f[2]);
    if (!pos) fail(source, lineno, "field 'position_group': unknown label '" + std::string(f[2]) + "'");
    if (r.draft_position > kMaxPick) {
      out.rejected.push_back({lineno, "pick " + std::to_string(r.draft_position) + " beyond 256"});
      continue;
    }
    r.position_group = *pos;
    out.records.push_back(r);
  }
  return out;
}

IngestResult<PickRecord> load_picks(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_picks(in, path.string());
}

std::vector<TradeRecord> parse_trades(std::istream& in, const std::string& source) {
  std::vector<TradeRecord> trades;
  std::unordered_map<std::string, std::size_t> index;
  std::string line;
  std::size_t lineno = 0;
  expect_header(in, line, lineno, source, "trade_year,side,pick_number,years_ahead,trade_id");
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto f = split(line);
    if (f.size() != 5) fail(source, lineno, "expected 5 fields, got " + std::to_string(f.size()));
    int year = parse_int(f[0], source, lineno, "trade_year");
    BundlePick pick{parse_int(f[2], source, lineno, "pick_number"), parse_int(f[3], source, lineno, "years_ahead")};
    if (pick.pick_number < 1) fail(source, lineno, "field 'pick_number': must be >= 1");
    if (pick.years_ahead < 0) fail(source, lineno, "field 'years_ahead': must be >= 0");
    if (f[4].empty()) fail(source, lineno, "field 'trade_id': empty");
    std::string id(f[4]);
    auto [it, inserted] = index.try_emplace(id, trades.size());
    if (inserted) {
      trades.push_back(TradeRecord{year, id, {}, {}});
    } else if (trades[it->second].trade_year != year) {
      fail(source, lineno, "field 'trade_year': inconsistent within trade " + id);
    }
    TradeRecord& t = trades[it->second];
    if (f[1] == "down") {
      t.down_bundle.push_back(pick);
    } else if (f[1] == "up") {
      t.up_bundle.push_back(pick);
    } else {
      fail(source, lineno, "field 'side': expected 'down' or 'up', got '" + std::string(f[1]) + "'");
    }
  }
  auto order = [](const BundlePick& a, const BundlePick& b) {
    return std::tie(a.years_ahead, a.pick_number) < std::tie(b.years_ahead, b.pick_number);
  };
  for (auto& t : trades) {
    if (t.down_bundle.empty() || t.up_bundle.empty()) {
      throw DataError(source + ": trade " + t.trade_id + " has an empty " +
                      (t.down_bundle.empty() ? "down" : "up") + " bundle");
    }
    std::sort(t.down_bundle.begin(), t.down_bundle.end(), order);
    std::sort(t.up_bundle.begin(), t.up_bundle.end(), order);
  }
  return trades;
}

std::vector<TradeRecord> load_trades(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_trades(in, path.string());
}

CostTable parse_cost_table(std::istream& in, const std::string& source) {
  CostTable table;
  std::string line;
  std::size_t lineno = 0;
  std::optional<double> base_cap, growth;
  // Metadata lines start with "#meta" and hold key=value pairs.
  while (in.peek() == '#') {
    std::getline(in, line);
    ++lineno;
    std::istringstream meta(line);
    std::string tok;
    meta >> tok;
    if (tok != "#meta") continue;
    while (meta >> tok) {
      auto eq = tok.find('=');
      if (eq == std::string::npos) fail(source, lineno, "malformed metadata entry '" + tok + "'");
      auto key = tok.substr(0, eq);
      double v = parse_double(std::string_view(tok).substr(eq + 1), source, lineno, key.c_str());
      if (key == "base_cap_dollars") base_cap = v;
      else if (key == "cap_growth_rate") growth = v;
    }
  }
  if (!base_cap || !growth) fail(source, lineno, "metadata row must define base_cap_dollars and cap_growth_rate");
  if (*base_cap <= 0.0) fail(source, lineno, "base_cap_dollars must be positive");
  if (*growth <= -1.0) fail(source, lineno, "cap_growth_rate must exceed -1");
  table.base_cap_dollars = *base_cap;
  table.cap_growth_rate = *growth;

  expect_header(in, line, lineno, source, "draft_position,season_index,compensation_dollars");
  std::vector<std::array<bool, 4>> seen(kNumPicks, {false, false, false, false});
  table.compensation.assign(kNumPicks, {0.0, 0.0, 0.0, 0.0});
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto f = split(line);
    if (f.size() != 3) fail(source, lineno, "expected 3 fields, got " + std::to_string(f.size()));
    int pick = parse_int(f[0], source, lineno, "draft_position");
    int season = parse_int(f[1], source, lineno, "season_index");
    double dollars = parse_double(f[2], source, lineno, "compensation_dollars");
    if (pick < kMinPick || pick > kMaxPick) fail(source, lineno, "field 'draft_position': outside [1,256]");
    if (season < 1 || season > 4) fail(source, lineno, "field 'season_index': outside [1,4]");
    if (dollars <= 0.0) fail(source, lineno, "field 'compensation_dollars': must be positive");
    auto& flag = seen[pick - 1][season - 1];
    if (flag) fail(source, lineno, "duplicate entry for pick " + std::to_string(pick));
    flag = true;
    table.compensation[pick - 1][season - 1] = dollars;
  }
  for (std::size_t x = 0; x < kNumPicks; ++x) {
    for (std::size_t s = 0; s < 4; ++s) {
      if (!seen[x][s]) {
        throw DataError(source + ": missing compensation for pick " + std::to_string(x + 1) + " season " +
                        std::to_string(s + 1));
      }
      if (x > 0 && table.compensation[x][s] > table.compensation[x - 1][s]) {
        throw DataError(source + ": compensation increases from pick " + std::to_string(x) + " to " +
                        std::to_string(x + 1) + " in season " + std::to_string(s + 1));
      }
    }
  }
  return table;
}

CostTable load_cost_table(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_cost_table(in, path.string());
}

std::array<double, 4> season_caps(const CostTable& table) {
  std::array<double, 4> caps{};
  double cap = table.base_cap_dollars;
  for (auto& c : caps) {
    c = cap;
    cap *= 1.0 + table.cap_growth_rate;
  }
  return caps;
}

PickCurve cost_curve(const CostTable& table) {
  if (table.compensation.size() != kNumPicks) throw DataError("cost table must cover picks 1..256");
  const auto caps = season_caps(table);
  PickCurve out{};
  for (std::size_t x = 0; x < kNumPicks; ++x) {
    double acc = 0.0;
    for (std::size_t s = 0; s < 4; ++s) acc += table.compensation[x][s] / caps[s];
    out[x] = acc / 4.0;
  }
  return out;
}

std::map<int, MomentSummary> empirical_moments(const std::vector<PickRecord>& picks, BustFilter filter,
                                               double cutoff) {
  std::map<int, std::vector<double>> groups;
  for (const auto& p : picks) {
    if (filter == BustFilter::above_cutoff && !(p.outcome_y > cutoff)) continue;
    if (filter == BustFilter::at_or_below_cutoff && p.outcome_y > cutoff) continue;
    groups[p.draft_position].push_back(p.outcome_y);
  }
  std::map<int, MomentSummary> out;
  for (const auto& [x, ys] : groups) {
    MomentSummary m;
    m.count = ys.size();
    double sum = 0.0;
    for (double y : ys) sum += y;
    m.mean = sum / static_cast<double>(m.count);
    if (m.count >= 2) {
      double ss = 0.0;
      for (double y : ys) ss += (y - m.mean) * (y - m.mean);
      m.sd = std::sqrt(ss / static_cast<double>(m.count - 1));
    }
    out.emplace(x, m);
  }
  return out;
}

}  // namespace draftval
