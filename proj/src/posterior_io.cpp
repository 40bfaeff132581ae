#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "draftval/inference.hpp"
#include "json.hpp"

namespace draftval {

namespace {

constexpr const char* kFormatName = "draftval.posterior";

void append_double(std::string& out, double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, p);
}

std::string shortest(double v) {
  std::string s;
  append_double(s, v);
  return s;
}

double parse_shortest(const std::string& text) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || p != text.data() + text.size()) throw ArtifactError("bad number in artifact header: " + text);
  return v;
}

}  // namespace

std::string serialize_posterior(const PosteriorSamples& s) {
  nlohmann::ordered_json h;
  h["format"] = kFormatName;
  h["version"] = kPosteriorFormatVersion;
  h["variant"] = std::string(variant_name(s.variant));
  // Floating-point metadata is stored as shortest round-trip strings.
  h["y_bust"] = shortest(s.settings.y_bust);
  h["normalize_tail"] = s.settings.normalize_tail;
  h["sampler"] = s.meta.sampler;
  h["seed"] = s.meta.seed;
  h["chains"] = s.meta.chains;
  h["iterations"] = s.meta.iterations;
  h["burn_in"] = s.meta.burn_in;
  h["acceptance"] = shortest(s.meta.acceptance);
  h["draws"] = s.num_draws();
  h["chain_offsets"] = s.chain_offsets;
  h["parameters"] = s.names;
  h["data_hash"] = s.meta.data_hash;
  h["config_hash"] = s.meta.config_hash;

  std::string out = h.dump();
  out += "\nchain,draw";
  for (const auto& n : s.names) {
    out += ',';
    out += n;
  }
  out += '\n';
  const std::size_t d = s.dim();
  for (std::size_t c = 0; c < s.num_chains(); ++c) {
    for (std::size_t i = s.chain_offsets[c]; i < s.chain_offsets[c + 1]; ++i) {
      out += std::to_string(c);
      out += ',';
      out += std::to_string(i - s.chain_offsets[c]);
      for (std::size_t k = 0; k < d; ++k) {
        out += ',';
        append_double(out, s.draws[i * d + k]);
      }
      out += '\n';
    }
  }
  return out;
}

void save_posterior(const PosteriorSamples& samples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArtifactError("cannot write " + path.string());
  const std::string text = serialize_posterior(samples);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw ArtifactError("write failed for " + path.string());
}

PosteriorSamples parse_posterior(std::string_view text, std::optional<Variant> expected) {
  auto truncated = [](std::size_t offset, const std::string& what) {
    return ArtifactError("posterior artifact truncated or corrupt at byte offset " + std::to_string(offset) + ": " +
                         what);
  };
  const std::size_t nl = text.find('\n');
  if (nl == std::string_view::npos) throw truncated(text.size(), "missing header line");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(text.substr(0, nl));
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactError(std::string("posterior artifact header is not valid JSON: ") + e.what());
  }
  if (!h.is_object() || h.value("format", "") != kFormatName) throw ArtifactError("not a posterior artifact");
  const int version = h.value("version", -1);
  if (version != kPosteriorFormatVersion) {
    throw ArtifactError("posterior artifact version " + std::to_string(version) + " is not supported (expected " +
                        std::to_string(kPosteriorFormatVersion) + ")");
  }
  PosteriorSamples s;
  std::size_t n_draws = 0;
  try {
    n_draws = h.at("draws").get<std::size_t>();
    const auto variant = parse_variant(h.at("variant").get<std::string>());
    if (!variant) throw ArtifactError("unknown model variant in artifact");
    s.variant = *variant;
    if (expected && *expected != s.variant) {
      throw ArtifactError("model mismatch: artifact holds the " + std::string(variant_name(s.variant)) +
                          " model, expected " + std::string(variant_name(*expected)));
    }
    s.settings.y_bust = parse_shortest(h.at("y_bust").get<std::string>());
    s.settings.normalize_tail = h.at("normalize_tail").get<bool>();
    s.meta.sampler = h.at("sampler").get<std::string>();
    s.meta.seed = h.at("seed").get<std::uint64_t>();
    s.meta.chains = h.at("chains").get<int>();
    s.meta.iterations = h.at("iterations").get<int>();
    s.meta.burn_in = h.at("burn_in").get<int>();
    s.meta.acceptance = parse_shortest(h.at("acceptance").get<std::string>());
    s.chain_offsets = h.at("chain_offsets").get<std::vector<std::size_t>>();
    s.names = h.at("parameters").get<std::vector<std::string>>();
    s.meta.data_hash = h.at("data_hash").get<std::string>();
    s.meta.config_hash = h.at("config_hash").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactError(std::string("posterior artifact header is incomplete: ") + e.what());
  }
  if (s.names.size() != param_dim(s.variant)) throw ArtifactError("parameter count does not match the model variant");
  if (s.chain_offsets.empty() || s.chain_offsets.back() != n_draws) {
    throw ArtifactError("chain offsets do not match the draw count");
  }

  std::size_t pos = nl + 1;
  const std::size_t hdr_end = text.find('\n', pos);
  if (hdr_end == std::string_view::npos) throw truncated(pos, "missing column header");
  pos = hdr_end + 1;

  const std::size_t d = s.names.size();
  s.draws.resize(n_draws * d);
  for (std::size_t row = 0; row < n_draws; ++row) {
    const std::size_t start = pos;
    const std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) {
      throw truncated(start, "expected " + std::to_string(n_draws) + " draws, found " + std::to_string(row) +
                                 " complete rows");
    }
    const char* p = text.data() + pos;
    const char* e = text.data() + end;
    // Skip the chain and draw index columns.
    for (int skip = 0; skip < 2; ++skip) {
      const char* comma = std::find(p, e, ',');
      if (comma == e) throw truncated(start, "row has too few fields");
      p = comma + 1;
    }
    for (std::size_t k = 0; k < d; ++k) {
      double v = 0.0;
      auto [q, ec] = std::from_chars(p, e, v);
      if (ec != std::errc{}) throw truncated(static_cast<std::size_t>(p - text.data()), "unparsable value");
      s.draws[row * d + k] = v;
      p = q;
      if (k + 1 < d) {
        if (p == e || *p != ',') throw truncated(static_cast<std::size_t>(p - text.data()), "row has too few fields");
        ++p;
      }
    }
    if (p != e) throw truncated(static_cast<std::size_t>(p - text.data()), "row has extra fields");
    pos = end + 1;
  }
  return s;
}

PosteriorSamples load_posterior(const std::filesystem::path& path, std::optional<Variant> expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot open posterior artifact " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_posterior(buf.str(), expected);
}

}  // namespace draftval
