#include "hebert/cli/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <random>
#include <sstream>

#include "hebert/bootstrap/bootstrap.hpp"
#include "hebert/ckks/crypto.hpp"
#include "hebert/ckks/evaluator.hpp"
#include "hebert/ckks/params.hpp"
#include "hebert/ckks/polyeval.hpp"
#include "hebert/ckks/serialize.hpp"
#include "hebert/common/binio.hpp"
#include "hebert/common/parallel.hpp"
#include "hebert/common/sha256.hpp"
#include "hebert/data/dataset.hpp"
#include "hebert/data/metrics.hpp"
#include "hebert/data/synthetic.hpp"
#include "hebert/dchi/noise.hpp"
#include "hebert/logreg/logreg.hpp"
#include "hebert/minimax/remez.hpp"
#include "hebert/probe/probe.hpp"
#include "hebert/ring/sampling.hpp"

namespace hebert::cli {

using json = nlohmann::ordered_json;

namespace {

constexpr const char* kModule = "cli";
constexpr const char* kVersion = "0.1.0";

// one invocation: options land here, the manifest is filled as we go
struct Session {
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;
  std::vector<std::string> argv;
  std::string command;
  std::string manifest_path;
  std::string out_hint;  // --out of the subcommand, used when nothing was written
  json manifest = json::object();
  json seeds = json::object();
  json inputs = json::object();
  json outputs = json::object();

  void input(const std::string& path) { inputs[path] = to_hex(sha256_file(path)); }
  void output(const std::string& path) { outputs[path] = to_hex(sha256_file(path)); }
  void seed(const std::string& name, const std::optional<std::uint64_t>& s) {
    if (s)
      seeds[name] = *s;
    else
      seeds[name] = "os-entropy";
  }
};

std::string quote(const std::string& s) {
  std::string q;
  for (char c : s) {
    if (c == '"' || c == '\\') q += '\\';
    q += c == '\n' ? ' ' : c;
  }
  return '"' + q + '"';
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  require(static_cast<bool>(f), kModule, ErrorCode::Io, "cannot write " + path);
  f << text;
  require(static_cast<bool>(f), kModule, ErrorCode::Io, "write failed for " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(static_cast<bool>(f), kModule, ErrorCode::Io, "cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

ckks::CkksContextPtr context_for(Session& s, const std::string& preset) {
  auto params = ckks::load_preset(preset);
  s.manifest["preset"] = preset;
  s.manifest["params_sha256"] = to_hex(params.hash());
  return ckks::CkksContext::create(params);
}

ckks::KeySet load_keys(Session& s, const ckks::CkksContext& ctx, const std::string& path) {
  s.input(path);
  return ckks::deserialize_keys(ctx, read_file(path, kModule));
}

// train/predict side: the key file must not carry the secret
ckks::KeySet load_server_keys(Session& s, const ckks::CkksContext& ctx, const std::string& path) {
  auto k = load_keys(s, ctx, path);
  require(!k.secret, kModule, ErrorCode::InsecureDisabled,
          path + " contains a secret key; server-side commands accept public/evaluation keys only");
  return k;
}

minimax::MinimaxPoly load_sigmoid(Session& s, std::string path) {
  if (path.empty()) path = (std::filesystem::path(ckks::preset_directory()) / "sigmoid-d15.minimax").string();
  auto p = minimax::from_text(read_text(path));
  s.input(path);
  require(p.domain_lo <= -12 && p.domain_hi >= 12, kModule, ErrorCode::InvalidArgument,
          "sigmoid approximant must cover [-12, 12]");
  return p;
}

struct RefreshOpts {
  std::string strategy = "bootstrap";
  bool insecure = false;
  std::string sk_path, pk_path;
  std::uint64_t debug_seed = 0;
  double boot_bound = 1.0;
};

void add_refresh_options(CLI::App* c, RefreshOpts& r, const std::string& default_strategy) {
  r.strategy = default_strategy;
  c->add_option("--refresh", r.strategy, "Level refresh: bootstrap, debug or none")
      ->check(CLI::IsMember({"bootstrap", "debug", "none"}))
      ->capture_default_str();
  c->add_flag("--insecure-debug-refresh", r.insecure,
              "Allow debug refresh (decrypt and re-encrypt with the secret key; not private)");
  c->add_option("--sk", r.sk_path, "Secret key file, only with --insecure-debug-refresh");
  c->add_option("--pk", r.pk_path, "Public key file for debug re-encryption");
  c->add_option("--debug-seed", r.debug_seed, "Seed for debug re-encryption")->capture_default_str();
  c->add_option("--boot-bound", r.boot_bound, "Slot magnitude bound assumed by bootstrap")->capture_default_str();
}

// holds whatever the chosen refresher points into
struct RefreshState {
  std::optional<ckks::KeySet> secret_keys;
  std::optional<boot::BootstrapContext> bc;
  logreg::Refresher refresher;
};

void make_refresher(Session& s, const RefreshOpts& o, const ckks::CkksContextPtr& ctx, RefreshState& st) {
  s.manifest["refresh"] = o.strategy;
  s.manifest["insecure_debug_refresh"] = o.insecure;
  const auto strategy = logreg::refresh_from_string(o.strategy);
  require(o.sk_path.empty() || o.insecure, kModule, ErrorCode::InsecureDisabled,
          "--sk is only accepted together with --insecure-debug-refresh");
  if (strategy == logreg::RefreshStrategy::Debug) {
    require(o.insecure, "ckks-bootstrap", ErrorCode::InsecureDisabled,
            "debug refresh needs --insecure-debug-refresh");
    require(!o.sk_path.empty() && !o.pk_path.empty(), kModule, ErrorCode::InvalidArgument,
            "debug refresh needs --sk and --pk");
    auto sk = load_keys(s, *ctx, o.sk_path);
    auto pk = load_keys(s, *ctx, o.pk_path);
    require(sk.secret.has_value(), kModule, ErrorCode::MissingKey, o.sk_path + " has no secret key");
    require(pk.pub.has_value(), kModule, ErrorCode::MissingKey, o.pk_path + " has no public key");
    sk.pub = std::move(pk.pub);
    st.secret_keys = std::move(sk);
    s.seed("debug_refresh", o.debug_seed);
    *s.err << "warning: insecure debug refresh; outputs are flagged as insecure provenance\n";
    st.refresher = logreg::Refresher::debug(ctx, *st.secret_keys->secret, *st.secret_keys->pub, true, o.debug_seed);
  } else if (strategy == logreg::RefreshStrategy::Bootstrap) {
    boot::BootstrapConfig cfg;
    cfg.message_bound = o.boot_bound;
    st.bc = boot::BootstrapContext::create(ctx, cfg);
    st.refresher = logreg::Refresher::bootstrap(*st.bc);
  }
}

void finish(Session& s, const std::string& status) {
  s.manifest["seeds"] = s.seeds;
  s.manifest["inputs"] = s.inputs;
  s.manifest["outputs"] = s.outputs;
  s.manifest["status"] = status;
  std::string path = s.manifest_path;
  if (path.empty()) {
    if (!s.outputs.empty())
      path = s.outputs.begin().key() + ".manifest.json";
    else if (!s.out_hint.empty())
      path = s.out_hint + ".manifest.json";
    else
      path = "hebert-" + s.command + ".manifest.json";
  }
  write_text(path, s.manifest.dump(2) + "\n");
}

// ---- subcommands ----

struct KeygenOpts {
  std::string preset = "desk", out;
  std::uint32_t dim = 768;
  bool bootstrap_keys = false;
  std::optional<std::uint64_t> seed;
};

void cmd_keygen(Session& s, const KeygenOpts& o) {
  auto ctx = context_for(s, o.preset);
  const auto layout = logreg::PackingLayout::for_dim(o.dim, ctx->slot_count());
  std::optional<boot::BootstrapContext> bc;
  if (o.bootstrap_keys) bc = boot::BootstrapContext::create(ctx);
  const auto seed = o.seed.value_or(ring::entropy_seed());
  s.seed("keygen", o.seed);
  if (o.seed) *s.err << "warning: fixed keygen seed; anyone holding the seed can rebuild the secret key\n";
  const auto keys = ckks::keygen(ctx, logreg::keygen_options(layout, o.bootstrap_keys, bc ? &*bc : nullptr), seed);
  const std::pair<const char*, ckks::KeyParts> parts[] = {
      {".sk", ckks::KeyParts::Secret}, {".pk", ckks::KeyParts::Public}, {".evk", ckks::KeyParts::Eval}};
  for (const auto& [ext, part] : parts) {
    const auto path = o.out + ext;
    write_file(path, ckks::serialize(*ctx, keys, part), kModule);
    s.output(path);
    *s.out << "wrote " << path << "\n";
  }
  s.manifest["dim"] = o.dim;
  s.manifest["bootstrap_keys"] = o.bootstrap_keys;
}

struct EncryptOpts {
  std::string preset = "desk", pk, in, out;
  std::size_t level = 3;
  bool no_labels = false;
  std::uint32_t classes = 0;
  std::optional<std::uint64_t> seed;
};

void cmd_encrypt(Session& s, const EncryptOpts& o) {
  auto ctx = context_for(s, o.preset);
  auto keys = load_keys(s, *ctx, o.pk);
  require(keys.pub.has_value(), kModule, ErrorCode::MissingKey, o.pk + " has no public key");
  s.input(o.in);
  auto ds = data::read_emb(o.in);
  ds.class_count = std::max({ds.class_count, o.classes, 2u});
  const auto layout = logreg::PackingLayout::for_dim(ds.dim, ctx->slot_count());
  s.seed("encrypt", o.seed);
  ckks::Encryptor enc(ctx, *keys.pub, o.seed);
  logreg::EncryptedDataset d;
  d.class_count = ds.class_count;
  d.layout = layout;
  d.batches = logreg::pack_batch(ds, layout, enc, o.level, !o.no_labels);
  write_file(o.out, logreg::serialize_dataset(*ctx, d), kModule);
  s.output(o.out);
  s.manifest["level"] = o.level;
  s.manifest["rows"] = ds.rows();
  s.manifest["ciphertexts"] = d.batches.size();
  *s.out << "encrypted " << ds.rows() << " rows into " << d.batches.size() << " ciphertexts at level " << o.level
         << "\n";
}

struct TrainOpts {
  std::string preset = "desk", evk, data, out, timing, sigmoid;
  double lr = 3.0, gamma = 0.9;
  std::size_t batch = 512, epochs = 1;
  std::uint64_t seed = 0;
  RefreshOpts refresh;
};

void cmd_train(Session& s, const TrainOpts& o) {
  auto ctx = context_for(s, o.preset);
  const auto keys = load_server_keys(s, *ctx, o.evk);
  s.input(o.data);
  const auto d = logreg::deserialize_dataset(*ctx, read_file(o.data, kModule));
  require(!d.batches.empty() && !d.batches[0].labels.empty(), kModule, ErrorCode::Format,
          o.data + " has no encrypted labels; re-encrypt without --no-labels");
  const auto sigmoid = load_sigmoid(s, o.sigmoid);
  RefreshState st;
  make_refresher(s, o.refresh, ctx, st);
  logreg::TrainConfig cfg{o.lr, o.gamma, o.batch, o.epochs, o.seed};
  s.seed("shuffle", o.seed);
  ckks::Evaluator ev(ctx, &keys.eval);
  auto res = logreg::train(ev, d.batches, d.class_count, d.layout, cfg, sigmoid, st.refresher,
                           [&](std::uint32_t m, std::size_t e, std::size_t it) {
                             *s.err << "model " << m << " epoch " << e + 1 << " iteration " << it << "\n";
                           });
  write_file(o.out, logreg::serialize_model(*ctx, res.model), kModule);
  s.output(o.out);
  const auto timing = o.timing.empty() ? o.out + ".timing.csv" : o.timing;
  write_text(timing, logreg::timing_csv(res.timing));
  s.output(timing);
  s.manifest["train"] = {{"learning_rate", o.lr}, {"momentum_gamma", o.gamma}, {"batch_size", o.batch},
                         {"epochs", o.epochs},    {"class_count", d.class_count}};
  s.manifest["insecure_provenance"] = res.model.insecure_provenance;
  for (const auto& t : res.timing)
    *s.out << "epoch " << t.epoch << " seconds " << t.seconds << " refreshes " << t.refreshes << "\n";
}

struct PredictOpts {
  std::string preset = "desk", evk, model, data, out, sigmoid;
  RefreshOpts refresh;
};

void cmd_predict(Session& s, const PredictOpts& o) {
  auto ctx = context_for(s, o.preset);
  const auto keys = load_server_keys(s, *ctx, o.evk);
  s.input(o.model);
  const auto model = logreg::deserialize_model(*ctx, read_file(o.model, kModule));
  s.input(o.data);
  const auto d = logreg::deserialize_dataset(*ctx, read_file(o.data, kModule));
  const auto sigmoid = load_sigmoid(s, o.sigmoid);
  RefreshState st;
  make_refresher(s, o.refresh, ctx, st);
  if (model.insecure_provenance) *s.err << "warning: model was trained with insecure debug refresh\n";
  ckks::Evaluator ev(ctx, &keys.eval);
  logreg::EncryptedScores sc;
  sc.class_count = model.class_count;
  sc.layout = model.layout;
  for (const auto& b : d.batches) sc.rows_per_batch.push_back(b.rows);
  sc.scores = logreg::predict(ev, model, d.batches, sigmoid, st.refresher);
  write_file(o.out, logreg::serialize_scores(*ctx, sc), kModule);
  s.output(o.out);
  s.manifest["insecure_provenance"] = model.insecure_provenance || st.refresher.insecure();
}

struct DecryptOpts {
  std::string preset = "desk", sk, scores, out;
};

void cmd_decrypt(Session& s, const DecryptOpts& o) {
  auto ctx = context_for(s, o.preset);
  const auto keys = load_keys(s, *ctx, o.sk);
  require(keys.secret.has_value(), kModule, ErrorCode::MissingKey, o.sk + " has no secret key");
  s.input(o.scores);
  const auto sc = logreg::deserialize_scores(*ctx, read_file(o.scores, kModule));
  const auto v = logreg::decrypt_scores(*ctx, sc.scores, sc.rows_per_batch, sc.layout, *keys.secret);
  const std::size_t models = sc.scores.size();
  std::ostringstream csv;
  csv << std::setprecision(17);
  for (std::size_t m = 0; m < models; ++m) csv << (m ? "," : "") << "p" << m;
  csv << "\n";
  for (std::size_t i = 0; i < v.size() / models; ++i) {
    for (std::size_t m = 0; m < models; ++m) csv << (m ? "," : "") << v[i * models + m];
    csv << "\n";
  }
  write_text(o.out, csv.str());
  s.output(o.out);
  *s.out << "decrypted " << v.size() / models << " rows\n";
}

std::vector<double> read_scores_csv(Session& s, const std::string& path, std::size_t& columns) {
  s.input(path);
  std::istringstream in(read_text(path));
  std::string line;
  std::getline(in, line);
  columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  std::vector<double> v;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::size_t n = 0;
    while (std::getline(row, cell, ',')) {
      try {
        v.push_back(std::stod(cell));
      } catch (const std::exception&) {
        fail("dataset-io", ErrorCode::Format, path + " line " + std::to_string(lineno) + ": bad number");
      }
      ++n;
    }
    require(n == columns, "dataset-io", ErrorCode::Format, path + " line " + std::to_string(lineno) + ": column count");
  }
  return v;
}

struct EvalOpts {
  std::string scores, labels, tune_scores, tune_labels, out;
  double threshold = 0.5;
};

void cmd_eval(Session& s, const EvalOpts& o) {
  std::size_t cols = 0;
  const auto scores = read_scores_csv(s, o.scores, cols);
  s.input(o.labels);
  const auto ds = data::read_emb(o.labels);
  const std::uint32_t classes = cols == 1 ? 2 : static_cast<std::uint32_t>(cols);
  require(scores.size() == ds.rows() * cols, "dataset-io", ErrorCode::LayoutMismatch,
          "score rows do not match label rows");
  double threshold = o.threshold;
  if (!o.tune_scores.empty()) {
    require(cols == 1 && !o.tune_labels.empty(), kModule, ErrorCode::InvalidArgument,
            "threshold tuning needs binary dev scores and --tune-labels");
    std::size_t dc = 0;
    const auto dev = read_scores_csv(s, o.tune_scores, dc);
    s.input(o.tune_labels);
    const auto dl = data::read_emb(o.tune_labels);
    std::vector<std::uint8_t> pos(dl.rows());
    for (std::size_t i = 0; i < dl.rows(); ++i) pos[i] = dl.labels[i] == 1;
    require(dev.size() == dl.rows(), "dataset-io", ErrorCode::LayoutMismatch, "dev score rows do not match labels");
    threshold = logreg::tune_threshold(dev, pos);
  }
  const auto r = data::compute_metrics(scores, ds.labels, threshold, classes);
  json rep = {{"threshold", r.threshold}, {"f1", r.f1},     {"macro_f1", r.macro_f1},
              {"auc", r.auc},             {"accuracy", r.accuracy}, {"rows", ds.rows()}};
  *s.out << rep.dump(2) << "\n";
  if (!o.out.empty()) {
    write_text(o.out, rep.dump(2) + "\n");
    s.output(o.out);
  }
  s.manifest["report"] = rep;
}

struct NoiseOpts {
  std::string in, out;
  double eta = 175;
  std::optional<std::uint64_t> seed;
};

void cmd_dp_noise(Session& s, const NoiseOpts& o) {
  s.input(o.in);
  auto ds = data::read_emb(o.in);
  const auto seed = o.seed.value_or(ring::entropy_seed());
  s.seed("noise", o.seed);
  dchi::NoiseParams p{o.eta, ds.dim, seed};
  p.validate();
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    auto row = ds.row(i);
    const auto z = dchi::privatize(std::vector<double>(row.begin(), row.end()), p, rng);
    for (std::size_t j = 0; j < z.size(); ++j) row[j] = static_cast<float>(z[j]);
  }
  data::write_emb(o.out, ds);
  s.output(o.out);
  s.manifest["eta"] = o.eta;
  *s.out << "noised " << ds.rows() << " rows, expected norm " << ds.dim / o.eta << "\n";
}

struct RemezOpts {
  std::string target = "sigmoid", out;
  std::size_t degree = 15;
  std::vector<double> domain{-12, 12};
};

void cmd_remez(Session& s, const RemezOpts& o) {
  const auto target = minimax::target_by_name(o.target);
  const auto p = minimax::remez_fit(target, o.domain[0], o.domain[1], o.degree);
  const bool cert = minimax::equioscillation_certificate(p, target);
  write_text(o.out, minimax::to_text(p));
  s.output(o.out);
  s.manifest["remez"] = {{"target", o.target},
                         {"degree", o.degree},
                         {"domain", o.domain},
                         {"certified_max_error", p.certified_max_error},
                         {"equioscillation", cert}};
  *s.out << "certified max error " << std::setprecision(6) << p.certified_max_error
         << (cert ? " (equioscillation verified)" : " (no equioscillation certificate)") << "\n";
  require(cert, "minimax-approx", ErrorCode::Convergence, "approximant failed its equioscillation check");
}

struct InvertOpts {
  std::string emb, text;
  double eta = 0, dev_fraction = 0.2, threshold = 0.5;
  std::size_t epochs = 30, min_freq = 2;
  double lr = 0.5;
  std::uint64_t seed = 0;
};

void cmd_invert(Session& s, const InvertOpts& o) {
  s.input(o.emb);
  const auto raw = read_file(o.emb, "inversion-probe");
  require(!(raw.size() >= 4 && std::string(raw.begin(), raw.begin() + 4) == "HCT1"), "inversion-probe",
          ErrorCode::Format,
          "input is ciphertext; black-box inversion needs plaintext vectors and does not apply to encrypted data");
  auto ds = data::decode_emb(raw);
  s.input(o.text);
  std::vector<std::string> sentences;
  {
    std::istringstream in(read_text(o.text));
    std::string line;
    while (std::getline(in, line)) sentences.push_back(line);
  }
  require(sentences.size() == ds.rows(), "inversion-probe", ErrorCode::LayoutMismatch,
          std::to_string(sentences.size()) + " sentences for " + std::to_string(ds.rows()) + " embeddings");
  s.seed("probe", o.seed);
  if (o.eta > 0) {
    dchi::NoiseParams p{o.eta, ds.dim, o.seed};
    std::mt19937_64 rng(o.seed);
    for (std::size_t i = 0; i < ds.rows(); ++i) {
      auto row = ds.row(i);
      const auto z = dchi::privatize(std::vector<double>(row.begin(), row.end()), p, rng);
      for (std::size_t j = 0; j < z.size(); ++j) row[j] = static_cast<float>(z[j]);
    }
  }
  std::vector<std::size_t> order(ds.rows());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(o.seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_dev = static_cast<std::size_t>(std::llround(o.dev_fraction * static_cast<double>(ds.rows())));
  std::vector<std::size_t> dev(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_dev)),
      tr(order.begin() + static_cast<std::ptrdiff_t>(n_dev), order.end());
  std::sort(dev.begin(), dev.end());
  std::sort(tr.begin(), tr.end());
  std::vector<std::string> st, sd;
  for (auto i : tr) st.push_back(sentences[i]);
  for (auto i : dev) sd.push_back(sentences[i]);
  const auto vocab = probe::build_vocab(st, o.min_freq);
  probe::ProbeConfig cfg;
  cfg.epochs = o.epochs;
  cfg.learning_rate = o.lr;
  cfg.threshold = o.threshold;
  cfg.seed = o.seed;
  const auto train_emb = ds.subset(tr), dev_emb = ds.subset(dev);
  const auto tt = probe::token_sets(st, vocab), td = probe::token_sets(sd, vocab);
  const auto m = probe::train_probe(train_emb, tt, vocab, cfg);
  json rep = {{"eta", o.eta},
              {"vocab", vocab.size()},
              {"train_rows", tr.size()},
              {"dev_rows", dev.size()},
              {"train_f1", probe::attack_f1(m, train_emb, tt, o.threshold)},
              {"dev_f1", dev.empty() ? 0.0 : probe::attack_f1(m, dev_emb, td, o.threshold)}};
  *s.out << rep.dump(2) << "\n";
  s.manifest["report"] = rep;
}

struct SizeOpts {
  std::string preset = "paper";
  std::size_t level = 3, rows = 11634;
  std::uint32_t dim = 768;
  std::optional<std::size_t> against;
};

void cmd_size_report(Session& s, const SizeOpts& o) {
  const auto params = ckks::load_preset(o.preset);
  s.manifest["preset"] = o.preset;
  s.manifest["params_sha256"] = to_hex(params.hash());
  require(o.level <= params.max_level, kModule, ErrorCode::InvalidArgument, "level above the preset's chain");
  const auto layout = logreg::PackingLayout::for_dim(o.dim, params.slot_count);
  const std::size_t cts = (o.rows + layout.rows_per_ct - 1) / layout.rows_per_ct;
  const std::size_t ref = o.against.value_or(params.max_level);
  const auto at = ckks::size_report(params, o.level, cts);
  const auto top = ckks::size_report(params, ref, cts);
  json rep = {{"preset", o.preset},
              {"rows", o.rows},
              {"ciphertexts", cts},
              {"level", o.level},
              {"bytes", at},
              {"reference_level", ref},
              {"reference_bytes", top},
              {"ratio", static_cast<double>(top) / static_cast<double>(at)}};
  *s.out << rep.dump(2) << "\n";
  s.manifest["report"] = rep;
}

struct BenchOpts {
  std::string preset = "desk";
  std::uint32_t dim = 768;
  std::size_t reps = 3;
};

void cmd_bench(Session& s, const BenchOpts& o) {
  auto ctx = context_for(s, o.preset);
  const auto layout = logreg::PackingLayout::for_dim(o.dim, ctx->slot_count());
  auto clock = [] { return std::chrono::steady_clock::now(); };
  auto secs = [](auto a, auto b) { return std::chrono::duration<double>(b - a).count(); };
  json rep = json::object();
  std::optional<boot::BootstrapContext> bc;
  if (ctx->max_level() >= 20) bc = boot::BootstrapContext::create(ctx);
  auto t0 = clock();
  const auto keys = ckks::keygen(ctx, logreg::keygen_options(layout, bc.has_value(), bc ? &*bc : nullptr), 1);
  rep["keygen_s"] = secs(t0, clock());
  ckks::Encryptor enc(ctx, *keys.pub, 2);
  ckks::Evaluator ev(ctx, &keys.eval);
  std::vector<double> v(ctx->slot_count(), 0.25);
  std::map<std::string, double> best;
  auto time = [&](const std::string& name, const std::function<void()>& f) {
    double b = 1e300;
    for (std::size_t r = 0; r < o.reps; ++r) {
      const auto a = clock();
      f();
      b = std::min(b, secs(a, clock()));
    }
    rep[name + "_s"] = b;
  };
  const auto top = ctx->max_level();
  auto ct = enc.encrypt_values(v, top);
  time("encrypt", [&] { enc.encrypt_values(v, top); });
  time("mult_rescale", [&] { ev.mult(ct, ct); });
  time("rotate", [&] { ev.rotate(ct, 1); });
  const auto data = enc.encrypt_values(std::vector<double>(ctx->slot_count(), 0.01), std::min<std::size_t>(3, top));
  time("encrypted_dot", [&] { logreg::encrypted_dot(ev, data, ct, layout); });
  const auto sig = minimax::remez_fit(minimax::sigmoid_target(), -12, 12, 15);
  time("sigmoid_d15", [&] { ckks::eval_chebyshev(ev, ct, sig.cheb_coeffs); });
  if (bc) {
    const auto low = ev.to_level(ct, 1);
    time("bootstrap", [&] { boot::bootstrap(ev, *bc, low); });
  }
  rep["threads"] = thread_count();
  *s.out << rep.dump(2) << "\n";
  s.manifest["report"] = rep;
}

struct SynthOpts {
  std::string kind = "blobs", out, text;
  std::size_t rows = 1000, vocab = 200, words = 8;
  std::uint32_t dim = 768, classes = 2;
  std::uint64_t seed = 0;
  double margin = 0.25, centre_sd = 0.05, noise_sd = 0.2;
};

void cmd_synth(Session& s, const SynthOpts& o) {
  s.seed("synth", o.seed);
  data::EmbeddingDataset ds;
  if (o.kind == "blobs") {
    ds = data::gaussian_blobs(o.rows, o.dim, o.classes, o.seed, o.centre_sd, o.noise_sd);
  } else if (o.kind == "separable") {
    ds = data::separable_binary(o.rows, o.dim, o.seed, o.margin, o.centre_sd, o.noise_sd);
  } else {
    require(!o.text.empty(), kModule, ErrorCode::InvalidArgument, "corpus needs --text for the sentences");
    auto c = data::synthetic_corpus(o.rows, o.vocab, o.words, o.dim, o.seed);
    std::string t;
    for (const auto& line : c.sentences) t += line + "\n";
    write_text(o.text, t);
    s.output(o.text);
    ds = std::move(c.embeddings);
  }
  data::write_emb(o.out, ds);
  s.output(o.out);
  *s.out << "wrote " << ds.rows() << " rows of dim " << ds.dim << " to " << o.out << "\n";
}

struct SplitOpts {
  std::string in, prefix;
  std::vector<double> fractions{0.6, 0.2, 0.2};
  std::uint64_t seed = 0;
};

void cmd_split(Session& s, const SplitOpts& o) {
  s.input(o.in);
  const auto ds = data::read_emb(o.in);
  s.seed("split", o.seed);
  const auto sp = data::split_dataset(ds, {o.fractions[0], o.fractions[1], o.fractions[2]}, o.seed);
  const auto prefix = o.prefix.empty() ? std::filesystem::path(o.in).replace_extension().string() : o.prefix;
  for (const auto* part : {&sp.train, &sp.dev, &sp.test}) {
    const auto path = prefix + "." + part->split_name;
    data::write_emb(path, *part);
    s.output(path);
    *s.out << path << " " << part->rows() << " rows\n";
  }
}

}  // namespace

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
      return kExitUsage;
    case ErrorCode::Format:
    case ErrorCode::NonFinite:
    case ErrorCode::LayoutMismatch:
    case ErrorCode::Io:
    case ErrorCode::Convergence:
      return kExitData;
    case ErrorCode::OutOfLevels:
      return kExitLevels;
    default:
      return kExitCrypto;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Session s;
  s.out = &out;
  s.err = &err;
  s.argv = args;

  CLI::App app{"Encrypted logistic regression over sentence embeddings (CKKS)", "hebert"};
  app.require_subcommand(1);
  std::size_t threads = 1;
  app.add_option("--threads", threads, "Worker threads")->check(CLI::Range(1, 1024))->capture_default_str();
  app.add_option("--manifest", s.manifest_path, "Run manifest path (default: next to the first output)");
  std::function<void()> action;

  auto sub = [&](const char* name, const char* help) {
    auto* c = app.add_subcommand(name, help);
    c->fallthrough();
    return c;
  };
  auto preset_opt = [](CLI::App* c, std::string& p) {
    c->add_option("--preset", p, "Parameter preset (desk, desk-boot, paper)")->capture_default_str();
  };

  KeygenOpts kg;
  {
    auto* c = sub("keygen", "Generate secret, public and evaluation keys");
    preset_opt(c, kg.preset);
    c->add_option("--out", kg.out, "Output prefix; writes .sk, .pk, .evk")->required();
    c->add_option("--dim", kg.dim, "Embedding dimension the rotation keys serve")->capture_default_str();
    c->add_flag("--bootstrap-keys", kg.bootstrap_keys, "Also generate bootstrapping keys");
    c->add_option("--seed", kg.seed, "Deterministic keygen seed (insecure; for tests)");
    c->callback([&] { action = [&] { cmd_keygen(s, kg); }; });
  }
  EncryptOpts en;
  {
    auto* c = sub("encrypt-data", "Encrypt an EMB1 file under the public key");
    preset_opt(c, en.preset);
    c->add_option("--pk", en.pk, "Public key file")->required();
    c->add_option("--in", en.in, "EMB1 input")->required();
    c->add_option("--out", en.out, "Encrypted dataset output")->required();
    c->add_option("--level", en.level, "Ciphertext level")->capture_default_str();
    c->add_flag("--no-labels", en.no_labels, "Skip label ciphertexts (inference data)");
    c->add_option("--classes", en.classes, "Class count when a split lacks the top label");
    c->add_option("--seed", en.seed, "Deterministic encryption seed (insecure; for tests)");
    c->callback([&] { action = [&] { cmd_encrypt(s, en); }; });
  }
  TrainOpts tr;
  {
    auto* c = sub("train", "Train logistic regression on encrypted data");
    preset_opt(c, tr.preset);
    c->add_option("--evk", tr.evk, "Evaluation key file")->required();
    c->add_option("--data", tr.data, "Encrypted training set")->required();
    c->add_option("--out", tr.out, "Encrypted model output")->required();
    c->add_option("--timing", tr.timing, "Timing CSV (default <out>.timing.csv)");
    c->add_option("--sigmoid", tr.sigmoid, "Sigmoid approximant file");
    c->add_option("--lr", tr.lr, "Learning rate")->capture_default_str();
    c->add_option("--gamma", tr.gamma, "Nesterov momentum")->capture_default_str();
    c->add_option("--batch", tr.batch, "Batch size in rows")->capture_default_str();
    c->add_option("--epochs", tr.epochs, "Epochs")->capture_default_str();
    c->add_option("--seed", tr.seed, "Shuffle seed")->capture_default_str();
    add_refresh_options(c, tr.refresh, "bootstrap");
    c->callback([&] { action = [&] { cmd_train(s, tr); }; });
  }
  PredictOpts pr;
  {
    auto* c = sub("predict", "Encrypted inference");
    preset_opt(c, pr.preset);
    c->add_option("--evk", pr.evk, "Evaluation key file")->required();
    c->add_option("--model", pr.model, "Encrypted model")->required();
    c->add_option("--data", pr.data, "Encrypted inference set")->required();
    c->add_option("--out", pr.out, "Encrypted scores output")->required();
    c->add_option("--sigmoid", pr.sigmoid, "Sigmoid approximant file");
    add_refresh_options(c, pr.refresh, "none");
    c->callback([&] { action = [&] { cmd_predict(s, pr); }; });
  }
  DecryptOpts de;
  {
    auto* c = sub("decrypt-scores", "Decrypt encrypted scores to CSV (key holder only)");
    preset_opt(c, de.preset);
    c->add_option("--sk", de.sk, "Secret key file")->required();
    c->add_option("--scores", de.scores, "Encrypted scores")->required();
    c->add_option("--out", de.out, "CSV output")->required();
    c->callback([&] { action = [&] { cmd_decrypt(s, de); }; });
  }
  EvalOpts ev;
  {
    auto* c = sub("eval", "Metrics from decrypted scores");
    c->add_option("--scores", ev.scores, "Scores CSV")->required();
    c->add_option("--labels", ev.labels, "EMB1 file with the true labels")->required();
    c->add_option("--threshold", ev.threshold, "Binary decision threshold")->capture_default_str();
    c->add_option("--tune-scores", ev.tune_scores, "Dev scores CSV for threshold tuning");
    c->add_option("--tune-labels", ev.tune_labels, "Dev EMB1 labels for threshold tuning");
    c->add_option("--out", ev.out, "JSON report output");
    c->callback([&] { action = [&] { cmd_eval(s, ev); }; });
  }
  NoiseOpts dn;
  {
    auto* c = sub("dp-noise", "Add d_chi noise to embeddings");
    c->add_option("--in", dn.in, "EMB1 input")->required();
    c->add_option("--out", dn.out, "EMB1 output")->required();
    c->add_option("--eta", dn.eta, "Privacy parameter")->check(CLI::PositiveNumber)->capture_default_str();
    c->add_option("--seed", dn.seed, "Deterministic noise seed (insecure; for tests)");
    c->callback([&] { action = [&] { cmd_dp_noise(s, dn); }; });
  }
  RemezOpts rz;
  {
    auto* c = sub("remez", "Fit a minimax polynomial");
    c->add_option("--target", rz.target, "Target function")->capture_default_str();
    c->add_option("--degree", rz.degree, "Degree")->capture_default_str();
    c->add_option("--domain", rz.domain, "Interval lo hi")->expected(2)->allow_extra_args(false);
    c->add_option("--out", rz.out, "Approximant output")->required();
    c->callback([&] { action = [&] { cmd_remez(s, rz); }; });
  }
  InvertOpts iv;
  {
    auto* c = sub("invert", "Black-box inversion probe on plaintext embeddings");
    c->add_option("--emb", iv.emb, "EMB1 embeddings")->required();
    c->add_option("--text", iv.text, "Sentences, one per line")->required();
    c->add_option("--eta", iv.eta, "d_chi noise before probing (0: none)")->capture_default_str();
    c->add_option("--dev-fraction", iv.dev_fraction, "Dev share")->capture_default_str();
    c->add_option("--epochs", iv.epochs, "Probe epochs")->capture_default_str();
    c->add_option("--lr", iv.lr, "Probe learning rate")->capture_default_str();
    c->add_option("--min-freq", iv.min_freq, "Vocabulary cutoff")->capture_default_str();
    c->add_option("--threshold", iv.threshold, "Decision threshold")->capture_default_str();
    c->add_option("--seed", iv.seed, "Seed")->capture_default_str();
    c->callback([&] { action = [&] { cmd_invert(s, iv); }; });
  }
  SizeOpts sz;
  {
    auto* c = sub("size-report", "Encrypted dataset size at a level");
    preset_opt(c, sz.preset);
    c->add_option("--level", sz.level, "Level")->capture_default_str();
    c->add_option("--rows", sz.rows, "Rows")->capture_default_str();
    c->add_option("--dim", sz.dim, "Embedding dimension")->capture_default_str();
    c->add_option("--against", sz.against, "Reference level (default: top)");
    c->callback([&] { action = [&] { cmd_size_report(s, sz); }; });
  }
  BenchOpts bn;
  {
    auto* c = sub("bench", "Time the main primitives");
    preset_opt(c, bn.preset);
    c->add_option("--dim", bn.dim, "Embedding dimension")->capture_default_str();
    c->add_option("--reps", bn.reps, "Repetitions (best is reported)")->capture_default_str();
    c->callback([&] { action = [&] { cmd_bench(s, bn); }; });
  }
  SynthOpts sy;
  {
    auto* c = sub("synth", "Write a synthetic EMB1 dataset");
    c->add_option("--kind", sy.kind, "blobs, separable or corpus")
        ->check(CLI::IsMember({"blobs", "separable", "corpus"}))
        ->capture_default_str();
    c->add_option("--out", sy.out, "EMB1 output")->required();
    c->add_option("--text", sy.text, "Sentence output (corpus)");
    c->add_option("--rows", sy.rows, "Rows")->capture_default_str();
    c->add_option("--dim", sy.dim, "Dimension")->capture_default_str();
    c->add_option("--classes", sy.classes, "Classes (blobs)")->capture_default_str();
    c->add_option("--vocab", sy.vocab, "Vocabulary size (corpus)")->capture_default_str();
    c->add_option("--words", sy.words, "Words per sentence (corpus)")->capture_default_str();
    c->add_option("--margin", sy.margin, "Margin (separable)")->capture_default_str();
    c->add_option("--centre-sd", sy.centre_sd, "Class centre spread")->capture_default_str();
    c->add_option("--noise-sd", sy.noise_sd, "Row spread")->capture_default_str();
    c->add_option("--seed", sy.seed, "Seed")->capture_default_str();
    c->callback([&] { action = [&] { cmd_synth(s, sy); }; });
  }
  SplitOpts sp;
  {
    auto* c = sub("split", "Stratified train/dev/test split of an EMB1 file");
    c->add_option("--in", sp.in, "EMB1 input")->required();
    c->add_option("--prefix", sp.prefix, "Output prefix (default: input without extension)");
    c->add_option("--fractions", sp.fractions, "train dev test")->expected(3);
    c->add_option("--seed", sp.seed, "Seed")->capture_default_str();
    c->callback([&] { action = [&] { cmd_split(s, sp); }; });
  }

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << app.help();
    err << "error module=" << kModule << " code=USAGE exit=" << kExitUsage << " message=" << quote(e.what()) << "\n";
    return kExitUsage;
  }

  for (const auto* c : app.get_subcommands()) {
    s.command = c->get_name();
    if (const auto* o = c->get_option_no_throw("--out"); o && o->count() > 0) s.out_hint = o->as<std::string>();
  }
  s.manifest["tool"] = "hebert";
  s.manifest["version"] = kVersion;
  s.manifest["command"] = s.command;
  s.manifest["argv"] = s.argv;
  s.manifest["threads"] = threads;
  set_thread_count(threads);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    action();
    s.manifest["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    finish(s, "ok");
  } catch (const Error& e) {
    const int code = exit_code(e.code());
    s.manifest["error"] = {{"module", e.module()}, {"code", to_string(e.code())}, {"message", e.what()}};
    try {
      finish(s, "error");
    } catch (const Error&) {
    }
    err << "error module=" << e.module() << " code=" << to_string(e.code()) << " exit=" << code
        << " message=" << quote(e.what()) << "\n";
    return code;
  } catch (const std::exception& e) {
    err << "error module=" << kModule << " code=INTERNAL exit=1 message=" << quote(e.what()) << "\n";
    return 1;
  }
  return kExitOk;
}

}  // namespace hebert::cli
