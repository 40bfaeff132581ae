#include <gtest/gtest.h>

#include "draftval/inference.hpp"
#include "test_support.hpp"

namespace draftval {
namespace {

PosteriorSamples make_samples() {
  PosteriorSamples s;
  s.variant = Variant::agnostic;
  s.settings.y_bust = 0.005;
  s.names = param_names(Variant::agnostic);
  s.chain_offsets = {0, 3, 5};
  for (int i = 0; i < 5; ++i) {
    for (int k = 0; k < 8; ++k) s.draws.push_back(0.1 * i - 0.7 * k + 1.0 / 3.0 + 1e-17 * k);
  }
  s.draws[3] = 1e-300;
  s.draws[4] = -123456789.123456789;
  s.meta.seed = 42;
  s.meta.chains = 2;
  s.meta.iterations = 10;
  s.meta.burn_in = 7;
  s.meta.acceptance = 0.8123456789;
  s.meta.data_hash = "00ff";
  s.meta.config_hash = "abcd";
  return s;
}

TEST(PosteriorIo, RoundTripIsExact) {
  const auto s = make_samples();
  const std::string text = serialize_posterior(s);
  const auto back = parse_posterior(text, Variant::agnostic);
  EXPECT_EQ(back.draws, s.draws);
  EXPECT_EQ(back.chain_offsets, s.chain_offsets);
  EXPECT_EQ(back.names, s.names);
  EXPECT_EQ(back.settings.y_bust, 0.005);
  EXPECT_EQ(back.meta.acceptance, s.meta.acceptance);
  EXPECT_EQ(back.meta.seed, 42u);
  EXPECT_EQ(back.meta.config_hash, "abcd");
  EXPECT_EQ(serialize_posterior(back), text);
}

TEST(PosteriorIo, LayoutIsHeaderColumnsRows) {
  const std::string text = serialize_posterior(make_samples());
  const auto nl = text.find('\n');
  EXPECT_EQ(text.front(), '{');
  EXPECT_EQ(text.compare(nl + 1, 10, "chain,draw"), 0);
  EXPECT_NE(text.find("\n1,1,"), std::string::npos);
}

TEST(PosteriorIo, TruncationReportsByteOffset) {
  const std::string text = serialize_posterior(make_samples());
  const std::string cut = text.substr(0, text.size() - 20);
  try {
    parse_posterior(cut);
    FAIL() << "expected ArtifactError";
  } catch (const ArtifactError& e) {
    EXPECT_NE(std::string(e.what()).find("byte offset"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_posterior(text.substr(0, 30)), ArtifactError);
}

TEST(PosteriorIo, CorruptValueIsRejected) {
  std::string text = serialize_posterior(make_samples());
  const auto pos = text.rfind("\n0,2,");
  text.replace(pos + 5, 1, "x");
  EXPECT_THROW(parse_posterior(text), ArtifactError);
}

TEST(PosteriorIo, VersionAndModelMismatch) {
  const std::string text = serialize_posterior(make_samples());
  std::string v2 = text;
  v2.replace(v2.find("\"version\":1"), 11, "\"version\":2");
  try {
    parse_posterior(v2);
    FAIL();
  } catch (const ArtifactError& e) {
    EXPECT_NE(std::string(e.what()).find("version 2"), std::string::npos);
  }
  try {
    parse_posterior(text, Variant::hierarchical);
    FAIL();
  } catch (const ArtifactError& e) {
    EXPECT_NE(std::string(e.what()).find("model mismatch"), std::string::npos);
  }
  EXPECT_THROW(parse_posterior("{\"format\":\"other\"}\n"), ArtifactError);
  EXPECT_THROW(parse_posterior("not json\n"), ArtifactError);
}

TEST(PosteriorIo, FileRoundTripAndMissingFile) {
  const auto dir = testing::scratch_dir("posterior_io");
  const auto s = make_samples();
  save_posterior(s, dir / "p.csv");
  EXPECT_EQ(load_posterior(dir / "p.csv").draws, s.draws);
  EXPECT_THROW(load_posterior(dir / "missing.csv"), ArtifactError);
}

}  // namespace
}  // namespace draftval
