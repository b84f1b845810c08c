#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace cgrn::reference {

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  double value = 0;  // measured error or count, check-specific
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  double seconds = 0;

  bool passed() const;
  std::size_t failures() const;
};

enum class Suite { Gradcheck, Oracle, Invariants, All };

Suite parse_suite(const std::string& s);
std::string to_string(Suite s);

std::vector<CheckResult> run_gradcheck(std::uint64_t seed);
std::vector<CheckResult> run_oracle(std::uint64_t seed);
/// Shape tables for both presets, parameter partition, gradient routing,
/// batched generation equivalence and loss identities. `paper_batches`
/// selects the batch sizes exercised on the full-width network.
std::vector<CheckResult> run_invariants(std::uint64_t seed, const std::vector<std::size_t>& paper_batches = {1, 2});

VerifyReport verify(Suite suite, std::uint64_t seed = 1);

/// CSV with one line per check (suite,name,PASS or FAIL,value,detail), then
/// "summary,checks=N,failures=F,seconds=S".
void write_report(std::ostream& os, const VerifyReport& report);

}  // namespace cgrn::reference
