// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance [--known-fail N]...
//
// Exit status is 0 when every failing criterion was listed with --known-fail.

#include <malloc.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <new>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <streambuf>

#include "piibench/commands.hpp"
#include "piibench/piibench.hpp"
#include "support/expected_tables.hpp"
#include "support/oracles.hpp"
#include "support/tempdir.hpp"

// --- heap accounting ----------------------------------------------------------

namespace heap {
std::atomic<std::size_t> live{0};
std::atomic<std::size_t> peak{0};

inline void note_alloc(void* p) {
  if (!p) return;
  std::size_t now = live.fetch_add(malloc_usable_size(p)) + malloc_usable_size(p);
  std::size_t prev = peak.load();
  while (now > prev && !peak.compare_exchange_weak(prev, now)) {
  }
}
inline void note_free(void* p) {
  if (p) live.fetch_sub(malloc_usable_size(p));
}
inline void* alloc(std::size_t n) {
  void* p = std::malloc(n ? n : 1);
  if (!p) throw std::bad_alloc();
  note_alloc(p);
  return p;
}
inline void* alloc_aligned(std::size_t n, std::align_val_t al) {
  void* p = nullptr;
  if (posix_memalign(&p, std::max(sizeof(void*), static_cast<std::size_t>(al)), n ? n : 1)) throw std::bad_alloc();
  note_alloc(p);
  return p;
}
inline void release(void* p) {
  note_free(p);
  std::free(p);
}
inline void reset_peak() { peak.store(live.load()); }
}  // namespace heap

void* operator new(std::size_t n) { return heap::alloc(n); }
void* operator new[](std::size_t n) { return heap::alloc(n); }
void* operator new(std::size_t n, const std::nothrow_t&) noexcept {
  try {
    return heap::alloc(n);
  } catch (...) {
    return nullptr;
  }
}
void* operator new[](std::size_t n, const std::nothrow_t&) noexcept {
  try {
    return heap::alloc(n);
  } catch (...) {
    return nullptr;
  }
}
void* operator new(std::size_t n, std::align_val_t al) { return heap::alloc_aligned(n, al); }
void* operator new[](std::size_t n, std::align_val_t al) { return heap::alloc_aligned(n, al); }
void operator delete(void* p) noexcept { heap::release(p); }
void operator delete[](void* p) noexcept { heap::release(p); }
void operator delete(void* p, std::size_t) noexcept { heap::release(p); }
void operator delete[](void* p, std::size_t) noexcept { heap::release(p); }
void operator delete(void* p, std::align_val_t) noexcept { heap::release(p); }
void operator delete[](void* p, std::align_val_t) noexcept { heap::release(p); }
void operator delete(void* p, std::size_t, std::align_val_t) noexcept { heap::release(p); }
void operator delete[](void* p, std::size_t, std::align_val_t) noexcept { heap::release(p); }

// --- harness -------------------------------------------------------------------

using namespace piibench;
using testing_support::slurp;
using testing_support::TempDir;

namespace {

const std::string kSource = PIIBENCH_SOURCE_DIR;

struct Outcome {
  bool pass = true;
  std::vector<std::string> failures;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (ok) return;
    pass = false;
    failures.push_back(what);
  }

  std::string text() const {
    std::string out;
    for (const auto& f : failures) out += f + "; ";
    return out + detail.str();
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) { return detail::fixed(v, digits); }

// 1, 2: group table and winner counts via the analyze command.
nlohmann::json run_analyze(double& elapsed) {
  TempDir dir;
  AnalyzeOptions opts;
  opts.rows = kSource + "/fixtures/entity_f1.csv";
  opts.a = "direct";
  opts.b = "sch";
  opts.out = dir.file("analysis.json");
  std::ostringstream out, err;
  auto t0 = std::chrono::steady_clock::now();
  auto r = run_command([&] { return cmd_analyze(opts, out, err); }, err);
  elapsed = seconds_since(t0);
  if (r.exit_code != 0) throw std::runtime_error("analyze failed: " + r.summary);
  return nlohmann::json::parse(slurp(*opts.out));
}

void criterion_group_table(Outcome& o) {
  double elapsed = 0;
  auto j = run_analyze(elapsed);
  const auto& groups = j["groups"];
  o.check(groups.size() == expected::kGroups.size(), "group count " + std::to_string(groups.size()));
  double worst = 0;
  for (const auto& e : expected::kGroups) {
    const nlohmann::json* g = nullptr;
    for (const auto& x : groups)
      if (x["group"] == std::string(e.group)) g = &x;
    if (!g) {
      o.check(false, std::string(e.group) + " missing");
      continue;
    }
    o.check((*g)["support"].get<std::uint64_t>() == e.support,
            std::string(e.group) + " support " + std::to_string((*g)["support"].get<std::uint64_t>()));
    double da = std::abs((*g)["f1_a"].get<double>() - e.f1_direct);
    double db = std::abs((*g)["f1_b"].get<double>() - e.f1_sch);
    worst = std::max({worst, da, db});
    o.check(da <= 0.0015 && db <= 0.0015, std::string(e.group) + " F1 off by " + fmt(std::max(da, db)));
  }
  o.check(elapsed < 1.0, "runtime " + fmt(elapsed, 3) + " s");
  o.detail << "10 groups, max |dF1| " << fmt(worst) << ", " << fmt(elapsed * 1000, 1) << " ms";
}

void criterion_winner_counts(Outcome& o) {
  double elapsed = 0;
  auto j = run_analyze(elapsed);
  auto wa = j["overall_wins"]["a"].get<std::uint64_t>();
  auto wb = j["overall_wins"]["b"].get<std::uint64_t>();
  auto ties = j["overall_wins"]["ties"].get<std::uint64_t>();
  o.check(wa == expected::kWinsDirect && wb == expected::kWinsSch && ties == 0,
          "overall " + std::to_string(wa) + "/" + std::to_string(wb) + "/" + std::to_string(ties));
  for (const auto& e : expected::kGroups)
    for (const auto& g : j["groups"])
      if (g["group"] == std::string(e.group))
        o.check(g["wins_a"] == e.wins_direct && g["wins_b"] == e.wins_sch,
                std::string(e.group) + " wins " + g["wins_a"].dump() + "/" + g["wins_b"].dump());
  o.detail << "overall " << wa << "/" << wb << "/" << ties << ", per-group columns checked";
}

void criterion_advantage(Outcome& o) {
  auto rows = load_entity_rows(kSource + "/fixtures/entity_f1.csv");
  auto top_a = top_advantage(rows, "direct", "sch", 10, Favour::a);
  auto top_b = top_advantage(rows, "direct", "sch", 10, Favour::b);
  o.check(top_a[0].entity == "CRYPTO_ADDRESS" && std::abs(top_a[0].delta - 0.863) < 0.0005,
          "top-1 direct " + top_a[0].entity + " " + fmt(top_a[0].delta, 3));
  o.check(top_b[0].entity == "HTTP_COOKIE" && std::abs(std::abs(top_b[0].delta) - 0.394) < 0.0005,
          "top-1 sch " + top_b[0].entity + " " + fmt(-top_b[0].delta, 3));

  auto compare = [&](const std::vector<Advantage>& got, const auto& want, const std::string& label) {
    std::vector<std::string> mismatches;
    for (std::size_t i = 0; i < want.size(); ++i)
      if (i >= got.size() || got[i].entity != want[i].entity)
        mismatches.push_back("#" + std::to_string(i + 1) + " " + (i < got.size() ? got[i].entity : "-") + "!=" +
                             std::string(want[i].entity));
    std::string msg = label + " top-10 differs at " + std::to_string(mismatches.size()) + " ranks";
    if (!mismatches.empty()) msg += " (" + mismatches.front() + ")";
    o.check(mismatches.empty(), msg);
    return mismatches.size();
  };
  auto ma = compare(top_a, expected::kTopDirect, "direct");
  auto mb = compare(top_b, expected::kTopSch, "sch");
  o.detail << "top-1 ok; top-10 rank mismatches direct " << ma << ", sch " << mb;
}

TypeCounters engineered(double precision, double recall) {
  auto p = static_cast<std::uint64_t>(std::llround(precision * 10000));
  auto r = static_cast<std::uint64_t>(std::llround(recall * 10000));
  TypeCounters c;
  c["X"] = {p * r, 10000 * r, 10000 * p};
  return c;
}

void criterion_harmonic(Outcome& o) {
  struct Case {
    double p, r, f1;
  };
  for (auto c : {Case{0.6277, 0.6645, 0.6455}, Case{0.5560, 0.6270, 0.5894}, Case{0.6300, 0.6662, 0.6476}}) {
    auto m = finalize(engineered(c.p, c.r)).micro;
    o.check(std::abs(m.precision - c.p) < 1e-12 && std::abs(m.recall - c.r) < 1e-12, "engineered counters off");
    o.check(std::abs(m.f1 - c.f1) <= 0.001, "F1 " + fmt(m.f1) + " vs " + fmt(c.f1));
    o.detail << fmt(c.p) << "/" << fmt(c.r) << "->" << fmt(m.f1) << " ";
  }
}

void criterion_streaming(Outcome& o) {
  std::mt19937_64 rng(20240611);
  const std::vector<std::size_t> chunks = {1, 3, 7, 100, 10000};
  auto t0 = std::chrono::steady_clock::now();
  std::size_t records = 0, mismatched = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n_records = rng() % 1001;
    std::size_t n_types = 1 + rng() % 6;
    std::vector<std::string> types;
    for (std::size_t t = 0; t < n_types; ++t) types.push_back("T" + std::to_string(t));
    std::vector<std::vector<std::string>> gold, pred;
    std::ostringstream g, p;
    for (std::size_t i = 0; i < n_records; ++i) {
      std::size_t len = 1 + rng() % 15;
      auto gl = oracle::random_labels(rng, len, types);
      auto pl = gl;
      for (auto& l : pl)
        if (rng() % 3 == 0) l = oracle::random_labels(rng, 1, types)[0];
      g << nlohmann::json{{"id", std::to_string(i)}, {"tokens", std::vector<std::string>(len, "w")}, {"labels", gl}}.dump()
        << '\n';
      p << nlohmann::json{{"id", std::to_string(i)}, {"labels", pl}}.dump() << '\n';
      gold.push_back(std::move(gl));
      pred.push_back(std::move(pl));
    }
    std::istringstream gi(g.str()), pi(p.str());
    auto report = stream_score(gi, pi, {chunks[rng() % chunks.size()], false});
    auto expect = oracle::batch_score(gold, pred);
    bool same = report.per_type.size() == expect.size();
    for (const auto& [type, c] : expect) {
      auto it = report.per_type.find(type);
      same = same && it != report.per_type.end() && it->second.counts == TypeCounts{c.tp, c.pred, c.gold};
    }
    mismatched += !same;
    records += n_records;
  }
  double elapsed = seconds_since(t0);
  o.check(mismatched == 0, std::to_string(mismatched) + " corpora differ");
  o.check(elapsed < 30.0, "runtime " + fmt(elapsed, 1) + " s");
  o.detail << "200 corpora, " << records << " records, " << fmt(elapsed, 2) << " s";
}

void criterion_span_oracle(Outcome& o) {
  std::mt19937_64 rng(6);
  std::size_t mismatched = 0;
  for (int i = 0; i < 10000; ++i) {
    auto labels = oracle::random_labels(rng, rng() % 20, {"A", "B", "C", "X"});
    std::vector<oracle::SpanTuple> got;
    for (const auto& s : extract_spans(parse_bio_sequence(labels))) got.emplace_back(s.entity, s.start, s.end);
    mismatched += got != oracle::spans(labels);
  }
  auto orphan = extract_spans(parse_bio_sequence({"O", "I-X"}));
  o.check(orphan == std::vector<Span>{{1, 2, "X"}}, "[O, I-X] does not yield exactly (1,2,X)");
  o.check(mismatched == 0, std::to_string(mismatched) + " sequences differ");
  o.detail << "10000 sequences, " << mismatched << " mismatches; [O, I-X] -> (1,2,X)";
}

void criterion_allocation(Outcome& o) {
  std::mt19937_64 rng(7);
  std::size_t bad_sum = 0, bad_quota = 0;
  for (int i = 0; i < 1000; ++i) {
    std::map<std::string, std::uint64_t> counts;
    std::size_t n = 1 + rng() % 10;
    for (std::size_t s = 0; s < n; ++s) counts["s" + std::to_string(s)] = 1 + rng() % 100000;
    std::uint64_t total = 0;
    for (const auto& [_, c] : counts) total += c;
    std::uint64_t target = rng() % (total + 1);
    auto a = largest_remainder_allocate(counts, target);
    std::uint64_t sum = 0;
    for (const auto& [name, k] : a) {
      sum += k;
      long double quota = static_cast<long double>(target) * counts[name] / total;
      bad_quota += std::abs(static_cast<long double>(k) - quota) >= 1.0L;
    }
    bad_sum += sum != target;
  }
  auto worked = largest_remainder_allocate({{"a", 7}, {"b", 2}, {"c", 1}}, 7);
  o.check(worked == std::map<std::string, std::uint64_t>{{"a", 5}, {"b", 1}, {"c", 1}}, "worked example");
  o.check(bad_sum == 0, std::to_string(bad_sum) + " wrong sums");
  o.check(bad_quota == 0, std::to_string(bad_quota) + " quota deviations >= 1");
  // Clamp case: a closed bucket passes its unit on and the total still holds.
  auto clamped = apportion({5, 3, 2}, 3, {10, 0, 10}, {0, 1, 2});
  o.check(std::accumulate(clamped.begin(), clamped.end(), std::uint64_t{0}) == 3 && clamped[1] == 0, "clamp case");
  o.detail << "1000 instances; {7,2,1}/7 -> {5,1,1}";
}

std::string prepare_and_sample(const TempDir& dir, const std::string& run, std::uint64_t seed, Outcome& o) {
  std::ostringstream out, err;
  auto outdir = dir.file(run);
  auto r = run_command([&] { return cmd_prepare({kSource + "/fixtures/corpus/config.json", outdir}, out, err); }, err);
  o.check(r.exit_code == 0, "prepare failed: " + r.summary);
  SampleOptions s{outdir + "/test.jsonl", 50, seed, outdir + "/test_sample.jsonl"};
  r = run_command([&] { return cmd_sample(s, out, err); }, err);
  o.check(r.exit_code == 0, "sample failed: " + r.summary);
  return outdir;
}

void criterion_determinism(Outcome& o) {
  TempDir dir;
  auto a = prepare_and_sample(dir, "a", 42, o);
  auto b = prepare_and_sample(dir, "b", 42, o);
  std::size_t files = 0;
  for (const char* f : {"train.jsonl", "val.jsonl", "test.jsonl", "test_sample.jsonl"}) {
    std::string fa = a + "/" + f, fb = b + "/" + f;
    o.check(slurp(fa) == slurp(fb), std::string(f) + " differs");
    auto ma = nlohmann::json::parse(slurp(manifest_path_for(fa)));
    auto mb = nlohmann::json::parse(slurp(manifest_path_for(fb)));
    o.check(ma == mb && ma["sha256"] == sha256_file(fa), std::string(f) + " manifest differs");
    ++files;
  }
  auto c = prepare_and_sample(dir, "c", 7, o);
  o.check(slurp(c + "/test.jsonl") == slurp(a + "/test.jsonl"), "test split should not depend on the sample seed");
  o.check(slurp(c + "/test_sample.jsonl") != slurp(a + "/test_sample.jsonl"), "seed 7 gives the same subset");
  auto m = manifest_from_json(nlohmann::json::parse(slurp(manifest_path_for(a + "/test_sample.jsonl"))));
  o.detail << files << " artifacts identical across runs, subset sha256 " << m.sha256.substr(0, 12) << ", "
           << m.records << " records from " << m.sources << " sources; seed 7 differs";
}

std::string jsonl_record(const std::string& id, const std::string& label) {
  return nlohmann::json{{"id", id}, {"tokens", {"w"}}, {"labels", {label}}}.dump() + "\n";
}

void criterion_rebalance_cap(Outcome& o) {
  TempDir dir;
  std::string other, target, capped;
  for (int i = 0; i < 900; ++i) other += jsonl_record("o" + std::to_string(i), i % 2 ? "B-NAME" : "B-CITY");
  for (int i = 0; i < 300; ++i) target += jsonl_record("t" + std::to_string(i), i % 3 ? "B-EMAIL" : "B-IBAN");
  for (int i = 0; i < 200; ++i) capped += jsonl_record("c" + std::to_string(i), "B-FINANCIAL_ENTITY");

  auto run = [&](std::vector<SourceSpec> sources, std::map<std::string, double> rebalance,
                 std::map<std::string, std::uint64_t> caps, const std::string& out) {
    PipelineConfig c;
    c.sources = std::move(sources);
    c.rebalance = std::move(rebalance);
    c.caps = std::move(caps);
    c.rare_label_threshold = 0;
    c.output_dir = dir.file(out);
    Diagnostics diag;
    auto res = run_pipeline(c, diag);
    std::map<std::string, std::size_t> kept;
    for (const auto& split : res.splits)
      for (const auto& r : split) ++kept[r.source];
    return kept;
  };
  auto kept = run({{"other", dir.write("other.jsonl", other), SourceFormat::bio_jsonl},
                   {"nemotron", dir.write("target.jsonl", target), SourceFormat::bio_jsonl}},
                  {{"nemotron", 0.10}}, {}, "rebalance");
  std::size_t t = kept["nemotron"];
  o.check(t + 1 >= 100 && t <= 101, "rebalance kept " + std::to_string(t));
  auto cap = run({{"finer_139", dir.write("capped.jsonl", capped), SourceFormat::bio_jsonl}}, {},
                 {{"finer_139", 150}}, "cap");
  o.check(cap["finer_139"] == 150, "cap kept " + std::to_string(cap["finer_139"]));
  o.detail << "rebalance kept " << t << " of 300 (other " << kept["other"] << "), cap kept " << cap["finer_139"]
           << " of 200";
}

void criterion_objective(Outcome& o) {
  auto space = load_taxonomy(kSource + "/fixtures/taxonomy.tsv");
  std::vector<TokenDistribution> d = {TokenDistribution(165, 1.0 / 165.0)};
  double lo = weighted_cross_entropy(d, {BioLabel::outside()}, space);
  double le = weighted_cross_entropy(d, {BioLabel::begin("IBAN")}, space);
  o.check(std::abs(lo - 0.1 * std::log(165.0)) <= 1e-9, "gold O loss " + fmt(lo, 12));
  o.check(std::abs(le - std::log(165.0)) <= 1e-9, "entity loss " + fmt(le, 12));
  o.check(combined_loss(1.0, 1.0, 0.3) == 1.3, "combined_loss(1,1,0.3) != 1.3");
  o.detail << "O " << fmt(lo, 6) << ", entity " << fmt(le, 6) << ", combined " << combined_loss(1.0, 1.0, 0.3);
}

void criterion_label_space(Outcome& o) {
  auto space = load_taxonomy(kSource + "/fixtures/taxonomy.tsv");
  o.check(space.fine_types().size() == 82, "types " + std::to_string(space.fine_types().size()));
  o.check(space.fine_labels().size() == 165, "fine labels " + std::to_string(space.fine_labels().size()));
  o.check(space.coarse_labels().size() == 21, "coarse labels " + std::to_string(space.coarse_labels().size()));
  o.detail << space.fine_types().size() << " types, " << space.fine_labels().size() << " fine, "
           << space.coarse_labels().size() << " coarse labels";
}

/// Endless-on-demand JSON-lines stream of generated records. Gold and
/// prediction generators share a seed so ids and lengths line up.
class GeneratedStream : public std::streambuf {
 public:
  GeneratedStream(std::uint64_t records, bool prediction) : remaining_(records), prediction_(prediction) {}

 protected:
  int_type underflow() override {
    if (gptr() < egptr()) return traits_type::to_int_type(*gptr());
    if (remaining_ == 0) return traits_type::eof();
    --remaining_;
    std::size_t len = 2 + rng_() % 6;
    static const char* const kTags[] = {"O", "B-NAME", "I-NAME", "B-IBAN", "I-IBAN", "B-EMAIL"};
    line_ = "{\"id\":\"r" + std::to_string(next_id_++) + "\",";
    if (!prediction_) {
      line_ += "\"tokens\":[\"w\"";
      for (std::size_t i = 1; i < len; ++i) line_ += ",\"w\"";
      line_ += "],";
    }
    line_ += "\"labels\":[";
    for (std::size_t i = 0; i < len; ++i) {
      std::size_t tag = rng_() % 6;
      if (prediction_ && noise_() % 5 == 0) tag = noise_() % 6;
      line_ += (i ? ",\"" : "\"") + std::string(kTags[tag]) + "\"";
    }
    line_ += "]}\n";
    setg(line_.data(), line_.data(), line_.data() + line_.size());
    return traits_type::to_int_type(*gptr());
  }

 private:
  std::uint64_t remaining_;
  bool prediction_;
  std::uint64_t next_id_ = 0;
  std::mt19937_64 rng_{99};
  std::mt19937_64 noise_{100};
  std::string line_;
};

std::size_t peak_while_scoring(std::uint64_t records, std::size_t chunk, MetricsReport& report) {
  GeneratedStream gbuf(records, false), pbuf(records, true);
  std::istream g(&gbuf), p(&pbuf);
  std::size_t before = heap::live.load();
  heap::reset_peak();
  report = stream_score(g, p, {chunk, false});
  return heap::peak.load() - before;
}

void criterion_memory(Outcome& o) {
  const std::size_t chunk = 5000;
  MetricsReport one, big;
  std::size_t chunk_set = peak_while_scoring(chunk, chunk, one);
  auto t0 = std::chrono::steady_clock::now();
  std::size_t peak = peak_while_scoring(1000000, chunk, big);
  double elapsed = seconds_since(t0);
  o.check(big.records == 1000000, "scored " + std::to_string(big.records) + " records");
  o.check(peak <= 10 * chunk_set, "peak " + std::to_string(peak) + " B > 10x chunk working set " +
                                      std::to_string(chunk_set) + " B");
  o.detail << "1,000,000 records in " << big.chunks << " chunks, peak heap " << peak / 1024 << " KiB vs chunk working set "
           << chunk_set / 1024 << " KiB (ratio " << fmt(static_cast<double>(peak) / static_cast<double>(chunk_set), 2)
           << "), " << fmt(elapsed, 1) << " s";
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> known_fail;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--known-fail" && i + 1 < argc) {
      known_fail.insert(std::atoi(argv[++i]));
    } else {
      std::cerr << "usage: acceptance [--known-fail N]...\n";
      return 2;
    }
  }

  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"group table reconstruction", criterion_group_table},
      {"winner counts", criterion_winner_counts},
      {"advantage tables", criterion_advantage},
      {"harmonic-mean consistency", criterion_harmonic},
      {"streaming equivalence", criterion_streaming},
      {"span-semantics oracle", criterion_span_oracle},
      {"largest-remainder properties", criterion_allocation},
      {"pipeline determinism", criterion_determinism},
      {"rebalance/cap math", criterion_rebalance_cap},
      {"objective closed forms", criterion_objective},
      {"label-space arithmetic", criterion_label_space},
      {"memory bound", criterion_memory},
  };

  int unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    int id = static_cast<int>(i + 1);
    bool known = known_fail.count(id) > 0;
    if (!o.pass && !known) ++unexpected;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << id << ". " << criteria[i].first << ": " << o.text()
              << (!o.pass && known ? " [known]" : "") << std::endl;
  }
  return unexpected ? 1 : 0;
}
