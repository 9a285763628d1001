#include <gtest/gtest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "hebert/cli/cli.hpp"
#include "hebert/common/binio.hpp"
#include "hebert/minimax/remez.hpp"

using namespace hebert;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result hebert_run(std::vector<std::string> args) {
  args.insert(args.begin(), "hebert");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path workdir() {
  static const fs::path p = [] {
    auto d = fs::temp_directory_path() / "hebert_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return p;
}

std::string at(const std::string& name) { return (workdir() / name).string(); }

// client side keys and data, shared by the tests below
void ensure_fixture() {
  static bool done = false;
  if (done) return;
  ASSERT_EQ(hebert_run({"synth", "--rows", "300", "--dim", "63", "--seed", "2", "--out", at("d.emb")}).code, 0);
  ASSERT_EQ(hebert_run({"keygen", "--dim", "63", "--seed", "4", "--out", at("k")}).code, 0);
  ASSERT_EQ(hebert_run({"encrypt-data", "--pk", at("k.pk"), "--in", at("d.emb"), "--out", at("d.hct"), "--seed", "5"})
                .code,
            0);
  done = true;
}

const std::regex kErrorLine(R"(error module=[a-z-]+ code=[A-Za-z_]+ exit=\d+ message=".*"\n$)");

}  // namespace

TEST(Cli, UnknownSubcommandIsUsageError) {
  const auto r = hebert_run({"frobnicate"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("keygen"), std::string::npos);
  EXPECT_TRUE(std::regex_search(r.err, kErrorLine)) << r.err;
  EXPECT_EQ(hebert_run({"size-report", "--bogus"}).code, cli::kExitUsage);
  EXPECT_EQ(hebert_run({}).code, cli::kExitUsage);
  EXPECT_EQ(hebert_run({"--help"}).code, 0);
}

TEST(Cli, SizeReportRatio) {
  const auto r = hebert_run({"size-report", "--preset", "paper", "--level", "3", "--rows", "11634", "--manifest",
                             at("size.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["ciphertexts"], 11634u / 64 + 1);
  EXPECT_GE(j["ratio"].get<double>(), 7.4);
  const auto m = nlohmann::json::parse(std::ifstream(at("size.json")));
  EXPECT_EQ(m["command"], "size-report");
  EXPECT_EQ(m["status"], "ok");
}

TEST(Cli, RemezWritesApproximant) {
  const auto r = hebert_run({"remez", "--target", "sigmoid", "--degree", "15", "--domain", "-12", "12", "--out",
                             at("sig.minimax")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream f(at("sig.minimax"));
  std::stringstream ss;
  ss << f.rdbuf();
  const auto p = minimax::from_text(ss.str());
  EXPECT_LE(p.certified_max_error, 0.00645);
  EXPECT_EQ(p.degree, 15u);
}

TEST(Cli, NoiseIsDeterministicUnderSeed) {
  ensure_fixture();
  ASSERT_EQ(hebert_run({"dp-noise", "--in", at("d.emb"), "--out", at("n1.emb"), "--seed", "9"}).code, 0);
  ASSERT_EQ(hebert_run({"dp-noise", "--in", at("d.emb"), "--out", at("n2.emb"), "--seed", "9"}).code, 0);
  EXPECT_EQ(read_file(at("n1.emb"), "test"), read_file(at("n2.emb"), "test"));
  const auto m = nlohmann::json::parse(std::ifstream(at("n1.emb.manifest.json")));
  EXPECT_EQ(m["seeds"]["noise"], 9);
  EXPECT_EQ(m["outputs"][at("n1.emb")].get<std::string>().size(), 64u);
}

TEST(Cli, ServerCommandsRefuseTheSecretKey) {
  ensure_fixture();
  // secret key file passed as the evaluation key
  auto r = hebert_run({"train", "--evk", at("k.sk"), "--data", at("d.hct"), "--out", at("m.hlr"), "--refresh", "none"});
  EXPECT_EQ(r.code, cli::kExitCrypto) << r.err;
  EXPECT_TRUE(std::regex_search(r.err, kErrorLine)) << r.err;
  // --sk without the opt-in
  r = hebert_run({"train", "--evk", at("k.evk"), "--data", at("d.hct"), "--out", at("m.hlr"), "--refresh", "debug",
                  "--sk", at("k.sk"), "--pk", at("k.pk")});
  EXPECT_EQ(r.code, cli::kExitCrypto);
  EXPECT_NE(r.err.find("INSECURE"), std::string::npos) << r.err;
  // debug refresh without the opt-in
  r = hebert_run({"train", "--evk", at("k.evk"), "--data", at("d.hct"), "--out", at("m.hlr"), "--refresh", "debug"});
  EXPECT_EQ(r.code, cli::kExitCrypto);
  EXPECT_FALSE(fs::exists(at("m.hlr")));
}

TEST(Cli, TrainWithoutRefreshRunsOutOfLevels) {
  ensure_fixture();
  const auto r = hebert_run({"train", "--evk", at("k.evk"), "--data", at("d.hct"), "--out", at("m.hlr"), "--batch",
                             "128", "--refresh", "none"});
  EXPECT_EQ(r.code, cli::kExitLevels) << r.err;
  EXPECT_NE(r.err.find("iteration 0"), std::string::npos);
  const auto m = nlohmann::json::parse(std::ifstream(at("m.hlr.manifest.json")));
  EXPECT_EQ(m["status"], "error");
  EXPECT_EQ(m["error"]["code"], "OUT_OF_LEVELS");
}

TEST(Cli, FullPipelineWithDebugRefresh) {
  ensure_fixture();
  auto r = hebert_run({"train", "--evk", at("k.evk"), "--data", at("d.hct"), "--out", at("m.hlr"), "--lr", "1",
                       "--batch", "128", "--refresh", "debug", "--insecure-debug-refresh", "--sk", at("k.sk"), "--pk",
                       at("k.pk")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = nlohmann::json::parse(std::ifstream(at("m.hlr.manifest.json")));
  EXPECT_EQ(m["insecure_provenance"], true);
  EXPECT_TRUE(fs::exists(at("m.hlr.timing.csv")));

  ASSERT_EQ(hebert_run({"encrypt-data", "--pk", at("k.pk"), "--in", at("d.emb"), "--out", at("t.hct"), "--level", "7",
                        "--no-labels"})
                .code,
            0);
  r = hebert_run({"predict", "--evk", at("k.evk"), "--model", at("m.hlr"), "--data", at("t.hct"), "--out", at("s.hsc")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("insecure"), std::string::npos);
  ASSERT_EQ(hebert_run({"decrypt-scores", "--sk", at("k.sk"), "--scores", at("s.hsc"), "--out", at("s.csv")}).code, 0);
  r = hebert_run({"eval", "--scores", at("s.csv"), "--labels", at("d.emb"), "--manifest", at("eval.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rep = nlohmann::json::parse(r.out);
  EXPECT_EQ(rep["rows"], 300);
  EXPECT_GT(rep["accuracy"].get<double>(), 0.8);

  // decrypt-scores needs the secret
  EXPECT_EQ(hebert_run({"decrypt-scores", "--sk", at("k.pk"), "--scores", at("s.hsc"), "--out", at("x.csv")}).code,
            cli::kExitCrypto);
}

TEST(Cli, ProbeRejectsCiphertext) {
  ensure_fixture();
  std::ofstream(at("lines.txt")) << "a b\n";
  const auto r =
      hebert_run({"invert", "--emb", at("d.hct"), "--text", at("lines.txt"), "--manifest", at("inv-bad.json")});
  EXPECT_EQ(r.code, cli::kExitData);
  EXPECT_NE(r.err.find("ciphertext"), std::string::npos) << r.err;
}

TEST(Cli, InversionOnSyntheticCorpus) {
  ASSERT_EQ(hebert_run({"synth", "--kind", "corpus", "--rows", "300", "--vocab", "40", "--words", "5", "--dim", "64",
                        "--out", at("c.emb"), "--text", at("c.txt")})
                .code,
            0);
  const auto r = hebert_run({"invert", "--emb", at("c.emb"), "--text", at("c.txt"), "--manifest", at("inv.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_GT(j["dev_f1"].get<double>(), 0.5);
}

TEST(Cli, SplitWritesThreeFiles) {
  ensure_fixture();
  ASSERT_EQ(hebert_run({"split", "--in", at("d.emb"), "--prefix", at("sp"), "--fractions", "0.5", "0.25", "0.25"}).code,
            0);
  for (const char* s : {"train", "dev", "test"}) EXPECT_TRUE(fs::exists(at(std::string("sp.") + s)));
}
