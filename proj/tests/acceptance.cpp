// Acceptance suite: one PASS/FAIL line per criterion. Optional arguments select criteria;
// -v prints every check row.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "ncb/checks.hpp"
#include "ncb/error.hpp"

using namespace ncb;

namespace {

KernelParams kp(double gamma, double s) {
  KernelParams p;
  p.gamma = gamma;
  p.s = s;
  return p;
}

template <class... V>
std::vector<CheckRow> join(V&&... parts) {
  std::vector<CheckRow> out;
  (out.insert(out.end(), parts.begin(), parts.end()), ...);
  return out;
}

struct Criterion {
  int id;
  std::string title;
  std::function<std::vector<CheckRow>()> run;
};

}  // namespace

int main(int argc, char** argv) {
  bool verbose = false;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "-v") {
      verbose = true;
    } else {
      only.insert(std::atoi(a.c_str()));
    }
  }
  const KernelParams hard = kp(0.0, 0.25), soft = kp(-2.0, 0.3);
  const Resolution base{8.0, 48, 32, 3.0};
  const Resolution fine{8.0, 64, 32, 3.0};
  const Resolution small{6.0, 36, 32, 3.0};
  const Resolution lp_box{4.0, 64, 32, 3.0};

  const std::vector<Criterion> criteria{
      {1, "Maxwellian moments", [&] { return check_moments(base); }},
      {2, "collision kinematics", [&] { return check_kinematics(10000, 1); }},
      {3, "sigma vs dual representation", [&] { return check_representations(hard, fine, 80); }},
      {4, "quadratic form identity", [&] { return check_form_identity(hard, fine, 10, 11); }},
      {5, "linearized operator structure", [&] { return check_linearized_structure(hard, fine); }},
      {6, "norm equivalence",
       [&] { return join(check_norm_equivalence(hard, base, 64), check_norm_equivalence(soft, base, 64)); }},
      {7, "sandwich", [&] { return join(check_sandwich(hard, base, false), check_sandwich(soft, base, true)); }},
      {8, "Littlewood-Paley",
       [&] { return join(check_lp(2, 0.0625, base, 1, 5), check_square_function(2, 0.0625, lp_box, 96)); }},
      {9, "Carleman kernel lower bound",
       [&] { return join(check_carleman(hard, 1000, 3), check_carleman(soft, 1000, 4)); }},
      {10, "spectral-gap dichotomy",
       [&] { return check_gap({hard, kp(-1.0, 0.5), soft}, fine, {2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0}); }},
      {11, "decay", [&] {
         return join(check_decay_hard(hard, base, 0.01, 12.0), check_decay_soft(soft, base, 0.1, 50.0, 2.0));
       }},
      {12, "entropy",
       [&] { return join(check_entropy(hard, base, 10, 5), check_entropy_run(hard, small, 10, 0.05)); }},
      {13, "macroscopic diagnostics", [&] { return check_macro(hard, small, 8, 0.1, 0.5); }},
      {14, "Picard iteration", [&] { return check_picard(hard, small, 0.05, 0.5, 10); }},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<CheckRow> rows;
    std::string err;
    try {
      rows = c.run();
    } catch (const Error& e) {
      err = e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = err.empty() && all_pass(rows);
    if (!ok) ++failed;
    std::string first_fail;
    for (const auto& r : rows)
      if (!r.pass) {
        first_fail = r.check + " [" + r.label + "] = " + std::to_string(r.value) + " " + r.relation + " " +
                     std::to_string(r.bound) + (r.detail.empty() ? "" : " (" + r.detail + ")");
        break;
      }
    std::printf("criterion %2d %-32s %s  (%zu checks, %.0fs)%s%s\n", c.id, c.title.c_str(), ok ? "PASS" : "FAIL",
                rows.size(), secs, first_fail.empty() ? "" : "  first failure: ", first_fail.c_str());
    if (!err.empty()) std::printf("    error: %s\n", err.c_str());
    if (verbose)
      for (const auto& r : rows)
        std::printf("    [%s] %-58s %-34s %-13.6g %-4s %-11.4g %s %s\n", r.anchor.c_str(), r.check.c_str(),
                    r.label.c_str(), r.value, r.relation.c_str(), r.bound, r.pass ? "ok" : "FAIL", r.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
