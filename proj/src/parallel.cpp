#include "jm/parallel.hpp"

#include <omp.h>

#include <cmath>
#include <cstdlib>
#include <exception>
#include <string>

#include "jm/errors.hpp"

namespace jm {

void Stats::add(const double* v) {
  ++n_;
  const double n = static_cast<double>(n_);
  for (int p = 0; p < static_cast<int>(c_.size()); ++p) {
    const int a = 2 * p, b = a + 1;
    c_[p] += (v[a] - mean_[a]) * (v[b] - (mean_[b] + (v[b] - mean_[b]) / n));
  }
  for (int i = 0; i < k_; ++i) {
    const double delta = v[i] - mean_[i];
    mean_[i] += delta / n;
    m2_[i] += delta * (v[i] - mean_[i]);
  }
}

void Stats::merge(const Stats& o) {
  rejected_ += o.rejected_;
  if (o.n_ == 0) return;
  if (n_ == 0) {
    const std::int64_t rej = rejected_;
    *this = o;
    rejected_ = rej;
    return;
  }
  const double na = static_cast<double>(n_), nb = static_cast<double>(o.n_), n = na + nb;
  for (int p = 0; p < static_cast<int>(c_.size()); ++p) {
    const int a = 2 * p, b = a + 1;
    c_[p] += o.c_[p] + (o.mean_[a] - mean_[a]) * (o.mean_[b] - mean_[b]) * na * nb / n;
  }
  for (int i = 0; i < k_; ++i) {
    const double delta = o.mean_[i] - mean_[i];
    mean_[i] += delta * nb / n;
    m2_[i] += o.m2_[i] + delta * delta * na * nb / n;
  }
  n_ += o.n_;
}

double Stats::standard_error(int i) const {
  return n_ > 1 ? std::sqrt(variance(i) / static_cast<double>(n_)) : 0.0;
}

namespace {

Stats run_block(std::int64_t b, std::int64_t n, const PathKernel& kernel, const MapReduceOptions& opt) {
  Stats s(opt.k, opt.paired);
  std::vector<double> buf(static_cast<std::size_t>(opt.k));
  const std::int64_t lo = b * opt.block, hi = std::min(n, lo + opt.block);
  for (std::int64_t i = lo; i < hi; ++i) {
    bool ok = false;
    try {
      ok = kernel(static_cast<std::uint64_t>(i), buf.data());
    } catch (const Singular&) {
      ok = false;
    }
    if (ok) s.add(buf.data());
    else s.reject();
  }
  return s;
}

Stats tree_reduce(std::vector<Stats>& parts, const MapReduceOptions& opt) {
  if (parts.empty()) return Stats(opt.k, opt.paired);
  for (std::size_t width = 1; width < parts.size(); width *= 2)
    for (std::size_t i = 0; i + width < parts.size(); i += 2 * width) parts[i].merge(parts[i + width]);
  return parts[0];
}

std::int64_t block_count(std::int64_t n, const MapReduceOptions& opt) {
  if (opt.block < 1) throw DomainError("block size must be >= 1");
  return (n + opt.block - 1) / opt.block;
}

}  // namespace

Stats map_reduce_serial(std::int64_t n, const PathKernel& kernel, const MapReduceOptions& opt) {
  const std::int64_t nb = block_count(n, opt);
  std::vector<Stats> parts;
  parts.reserve(static_cast<std::size_t>(nb));
  for (std::int64_t b = 0; b < nb; ++b) parts.push_back(run_block(b, n, kernel, opt));
  return tree_reduce(parts, opt);
}

Stats map_reduce_parallel(std::int64_t n, const PathKernel& kernel, const MapReduceOptions& opt) {
  const std::int64_t nb = block_count(n, opt);
  std::vector<Stats> parts(static_cast<std::size_t>(nb));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(nb));
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, opt.workers))
  for (std::int64_t b = 0; b < nb; ++b) {
    try {
      parts[static_cast<std::size_t>(b)] = run_block(b, n, kernel, opt);
    } catch (...) {
      errors[static_cast<std::size_t>(b)] = std::current_exception();
    }
  }
  // Report the failure of the first block, as the serial loop would.
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return tree_reduce(parts, opt);
}

Stats map_reduce(std::int64_t n, const PathKernel& kernel, const MapReduceOptions& opt) {
  return opt.workers <= 1 ? map_reduce_serial(n, kernel, opt) : map_reduce_parallel(n, kernel, opt);
}

int resolve_workers(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("JM_WORKERS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("JM_WORKERS must be a positive integer, got '") + env + "'");
  }
  return std::max(1, omp_get_num_procs());
}

}  // namespace jm
