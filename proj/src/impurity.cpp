#include "sgt/impurity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sgt {

std::string to_string(Criterion c) {
  switch (c) {
    case Criterion::gini: return "gini";
    case Criterion::entropy: return "entropy";
    case Criterion::mse: return "mse";
  }
  return "gini";
}

Criterion parse_criterion(const std::string& text) {
  if (text == "gini") return Criterion::gini;
  if (text == "entropy") return Criterion::entropy;
  if (text == "mse" || text == "squared_error") return Criterion::mse;
  throw std::invalid_argument("unknown criterion '" + text + "'");
}

bool criterion_matches(Criterion c, Task task) {
  return (c == Criterion::mse) == (task == Task::regression);
}

TargetStats TargetStats::classification(int num_classes) {
  if (num_classes < 1) throw std::invalid_argument("num_classes must be >= 1");
  TargetStats s;
  s.counts_.assign(static_cast<std::size_t>(num_classes), 0);
  return s;
}

TargetStats TargetStats::regression() { return TargetStats{}; }

TargetStats TargetStats::regression(std::int64_t count, double sum, double sum_sq) {
  if (count < 0) throw std::domain_error("negative sample count");
  TargetStats s;
  s.count_ = count;
  s.sum_ = sum;
  s.sum_sq_ = sum_sq;
  return s;
}

void TargetStats::add(double target, std::int64_t multiplicity) {
  if (is_classification()) {
    const auto c = static_cast<std::size_t>(target);
    if (target < 0 || c >= counts_.size()) {
      throw std::out_of_range("class id out of range");
    }
    counts_[c] += multiplicity;
  } else {
    const auto m = static_cast<double>(multiplicity);
    sum_ += m * target;
    sum_sq_ += m * target * target;
  }
  count_ += multiplicity;
}

double TargetStats::prediction() const {
  if (!is_classification()) return mean();
  const auto it = std::max_element(counts_.begin(), counts_.end());
  return static_cast<double>(it - counts_.begin());
}

std::vector<double> TargetStats::distribution() const {
  std::vector<double> p(counts_.size(), 0.0);
  if (count_ == 0) return p;
  for (std::size_t c = 0; c < counts_.size(); ++c) {
    p[c] = static_cast<double>(counts_[c]) / static_cast<double>(count_);
  }
  return p;
}

TargetStats& TargetStats::merge(const TargetStats& delta) {
  if (delta.counts_.size() != counts_.size()) {
    throw std::invalid_argument("merging incompatible target stats");
  }
  for (std::size_t c = 0; c < counts_.size(); ++c) counts_[c] += delta.counts_[c];
  count_ += delta.count_;
  sum_ += delta.sum_;
  sum_sq_ += delta.sum_sq_;
  return *this;
}

TargetStats& TargetStats::remove(const TargetStats& delta) {
  if (delta.counts_.size() != counts_.size()) {
    throw std::invalid_argument("removing incompatible target stats");
  }
  if (delta.count_ > count_) {
    throw std::domain_error("removal would leave a negative count");
  }
  for (std::size_t c = 0; c < counts_.size(); ++c) {
    if (delta.counts_[c] > counts_[c]) {
      throw std::domain_error("removal would leave a negative class count");
    }
  }
  for (std::size_t c = 0; c < counts_.size(); ++c) counts_[c] -= delta.counts_[c];
  count_ -= delta.count_;
  if (count_ == 0) {
    sum_ = 0.0;
    sum_sq_ = 0.0;
  } else {
    sum_ -= delta.sum_;
    sum_sq_ -= delta.sum_sq_;
  }
  return *this;
}

TargetStats stats_merge(TargetStats s, const TargetStats& delta) {
  s.merge(delta);
  return s;
}

TargetStats stats_remove(TargetStats s, const TargetStats& delta) {
  s.remove(delta);
  return s;
}

double impurity(const TargetStats& s, Criterion c) {
  if (s.count() <= 0) throw std::domain_error("impurity of empty stats");
  const double w = s.weight();
  switch (c) {
    case Criterion::gini: {
      if (!s.is_classification()) throw std::invalid_argument("gini needs class counts");
      double sq = 0.0;
      for (auto n : s.counts()) {
        const double p = static_cast<double>(n) / w;
        sq += p * p;
      }
      return std::max(0.0, 1.0 - sq);
    }
    case Criterion::entropy: {
      if (!s.is_classification()) throw std::invalid_argument("entropy needs class counts");
      double h = 0.0;
      for (auto n : s.counts()) {
        if (n == 0) continue;
        const double p = static_cast<double>(n) / w;
        h -= p * std::log2(p);
      }
      return std::max(0.0, h);
    }
    case Criterion::mse: {
      if (s.is_classification()) throw std::invalid_argument("mse needs real targets");
      const double var = (s.sum_sq() - s.sum() * s.sum() / w) / w;
      return std::max(0.0, var);
    }
  }
  return 0.0;
}

double weighted_term(const TargetStats& s, Criterion c) {
  return s.count() > 0 ? s.weight() * impurity(s, c) : 0.0;
}

double weighted_impurity(std::span<const TargetStats> parts, Criterion c) {
  double total = 0.0;
  for (const auto& p : parts) total += weighted_term(p, c);
  return total;
}

}  // namespace sgt
