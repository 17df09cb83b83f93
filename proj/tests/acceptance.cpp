// Acceptance run: one PASS/FAIL line per criterion. Criteria with a time
// budget also fail when they run over it.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "se3kit/selftest.hpp"

using namespace se3kit;

namespace {

void report(bool passed, int id, const std::string& name, double seconds, double budget, const std::string& detail) {
  char timing[96];
  if (budget > 0.0)
    std::snprintf(timing, sizeof timing, "%.2f s of %.0f s", seconds, budget);
  else
    std::snprintf(timing, sizeof timing, "%.2f s", seconds);
  std::printf("%s %d %s [%s]%s\n", passed ? "PASS" : "FAIL", id, name.c_str(), timing, detail.c_str());
  std::fflush(stdout);
}

std::string metric_summary(const CriterionResult& c) {
  std::string out;
  char buf[160];
  for (const Metric& m : c.metrics) {
    if (!m.checked()) continue;
    std::snprintf(buf, sizeof buf, " %s=%.3g%s", m.name.c_str(), m.value, m.passed() ? "" : "(!)");
    out += buf;
  }
  return out;
}

bool run_selftest(const std::filesystem::path& out, int threads, std::uint64_t seed) {
  const std::string cmd = "SE3KIT_THREADS=" + std::to_string(threads) + " \"" SE3KIT_CLI_PATH "\" selftest --seed " +
                          std::to_string(seed) + " --out \"" + out.string() + "\" 2>/dev/null";
  return std::system(cmd.c_str()) == 0;
}

}  // namespace

int main(int argc, char** argv) {
  const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 7;
  bool all = true;

  for (int id = 1; id <= kCriterionCount; ++id) {
    const auto start = std::chrono::steady_clock::now();
    bool passed = false;
    std::string name = "criterion";
    double budget = 0.0;
    std::string detail;
    try {
      const CriterionResult c = run_criterion(id, seed);
      name = c.name;
      budget = c.budget_seconds;
      passed = c.passed();
      detail = metric_summary(c);
    } catch (const std::exception& e) {
      detail = std::string(" error: ") + e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (budget > 0.0 && seconds > budget) {
      passed = false;
      detail += " over budget";
    }
    report(passed, id, name, seconds, budget, detail);
    all = all && passed;
  }

  {
    const auto start = std::chrono::steady_clock::now();
    const auto dir = std::filesystem::temp_directory_path() / ("se3kit_determinism_" + std::to_string(seed));
    std::filesystem::create_directories(dir);
    const auto a = dir / "run1.json", b = dir / "run2.json";
    const bool ran = run_selftest(a, 1, seed) && run_selftest(b, 4, seed);
    bool same = false;
    std::uintmax_t bytes = 0;
    if (ran && std::filesystem::exists(a) && std::filesystem::exists(b)) {
      const std::string ta = read_text_file(a.string()), tb = read_text_file(b.string());
      same = !ta.empty() && ta == tb;
      bytes = ta.size();
    }
    std::filesystem::remove_all(dir);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report(ran && same, 8, "determinism", seconds, 0.0,
           " selftest twice (1 and 4 threads): " + std::string(!ran ? "run failed" : same ? "identical" : "differ") +
               ", " + std::to_string(bytes) + " bytes");
    all = all && ran && same;
  }

  std::printf("%s\n", all ? "ALL PASS" : "SOME CRITERIA FAILED");
  return all ? 0 : 1;
}
