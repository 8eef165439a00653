#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace jm {

// Running moments of K statistics with co-moments of the pairs (2j, 2j+1).
// Merging follows Chan et al., so any fixed merge tree gives fixed bits.
class Stats {
 public:
  Stats() = default;
  Stats(int k, bool paired) : k_(k), paired_(paired), mean_(k, 0.0), m2_(k, 0.0), c_(paired ? k / 2 : 0, 0.0) {}

  void add(const double* v);
  void reject() { ++rejected_; }
  void merge(const Stats& o);

  int size() const { return k_; }
  std::int64_t count() const { return n_; }
  std::int64_t rejected() const { return rejected_; }
  double mean(int i) const { return mean_[i]; }
  // Sample variance (n - 1 denominator).
  double variance(int i) const { return n_ > 1 ? m2_[i] / static_cast<double>(n_ - 1) : 0.0; }
  double covariance(int pair) const { return n_ > 1 ? c_[pair] / static_cast<double>(n_ - 1) : 0.0; }
  double standard_error(int i) const;

 private:
  int k_ = 0;
  bool paired_ = false;
  std::int64_t n_ = 0;
  std::int64_t rejected_ = 0;
  std::vector<double> mean_, m2_, c_;
};

// Per-path kernel: writes K values for path i and returns false when the path
// is rejected.
using PathKernel = std::function<bool(std::uint64_t path, double* out)>;

struct MapReduceOptions {
  int k = 1;
  bool paired = false;
  int workers = 1;
  std::int64_t block = 1024;
};

// Paths are cut into fixed blocks reduced in path order, then merged by a
// fixed pairwise tree. The result does not depend on the worker count.
Stats map_reduce_serial(std::int64_t n, const PathKernel& kernel, const MapReduceOptions& opt);
Stats map_reduce_parallel(std::int64_t n, const PathKernel& kernel, const MapReduceOptions& opt);
Stats map_reduce(std::int64_t n, const PathKernel& kernel, const MapReduceOptions& opt);

// Worker count from the flag, then JM_WORKERS, then the number of cores.
int resolve_workers(int flag);

}  // namespace jm
