#include "cfsim/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cfsim/error.hpp"

namespace cfsim {

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

// Grows one tree from per-feature presorted sample lists. Each node owns the
// same [begin, end) range in every list; splitting stably partitions all of
// them, so no node ever re-sorts.
class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int mtry, int min_leaf,
              RngStream& stream)
      : x_(x), y_(y), mtry_(mtry), min_leaf_(min_leaf), stream_(stream) {
    const auto p = static_cast<std::size_t>(x.cols());
    features_.resize(p);
    order_.resize(p);
    sorted_.resize(p);
    for (std::size_t f = 0; f < p; ++f) {
      auto& o = order_[f];
      o.resize(static_cast<std::size_t>(x.rows()));
      std::iota(o.begin(), o.end(), std::int32_t{0});
      std::stable_sort(o.begin(), o.end(), [&](std::int32_t a, std::int32_t b) {
        return x_(a, static_cast<Eigen::Index>(f)) < x_(b, static_cast<Eigen::Index>(f));
      });
    }
  }

  // `counts[i]` is the multiplicity of row i in the (bootstrap) sample.
  RegressionTree build(const std::vector<std::uint32_t>& counts) {
    std::size_t total = 0;
    for (auto c : counts) total += c;
    for (std::size_t f = 0; f < sorted_.size(); ++f) {
      auto& list = sorted_[f];
      list.resize(total);
      std::size_t k = 0;
      for (const std::int32_t row : order_[f]) {
        for (std::uint32_t c = counts[static_cast<std::size_t>(row)]; c > 0; --c) list[k++] = row;
      }
    }
    scratch_.resize(total);

    RegressionTree tree;
    tree.nodes.emplace_back();
    struct Pending {
      std::int32_t node;
      std::size_t begin, end;
    };
    std::vector<Pending> stack{{0, 0, total}};
    while (!stack.empty()) {
      const Pending p = stack.back();
      stack.pop_back();
      const Split split = best_split(p.begin, p.end);
      if (split.feature < 0) {
        tree.nodes[p.node].value = leaf_value(p.begin, p.end);
        continue;
      }
      const std::size_t cut = partition_all(split, p.begin, p.end);
      const auto left = static_cast<std::int32_t>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& node = tree.nodes[p.node];
      node.feature = split.feature;
      node.threshold = split.threshold;
      node.left = left;
      node.right = left + 1;
      stack.push_back({left + 1, cut, p.end});
      stack.push_back({left, p.begin, cut});
    }
    return tree;
  }

 private:
  const std::vector<std::int32_t>& rows() const { return sorted_[0]; }

  double leaf_value(std::size_t begin, std::size_t end) const {
    double sum = 0.0, lo = y_(rows()[begin]), hi = lo;
    for (std::size_t k = begin; k < end; ++k) {
      const double v = y_(rows()[k]);
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    // Clamp absorbs rounding so leaves never leave the target range.
    return std::clamp(sum / static_cast<double>(end - begin), lo, hi);
  }

  std::size_t partition_all(const Split& split, std::size_t begin, std::size_t end) {
    std::size_t cut = begin;
    for (auto& list : sorted_) {
      std::size_t l = begin, r = 0;
      for (std::size_t k = begin; k < end; ++k) {
        const std::int32_t row = list[k];
        if (x_(row, split.feature) <= split.threshold) {
          list[l++] = row;
        } else {
          scratch_[r++] = row;
        }
      }
      std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(r),
                list.begin() + static_cast<std::ptrdiff_t>(l));
      cut = l;
    }
    return cut;
  }

  Split best_split(std::size_t begin, std::size_t end) {
    Split best;
    const std::size_t n = end - begin;
    if (n < 2 * static_cast<std::size_t>(min_leaf_)) return best;

    double mean = 0.0, lo = y_(rows()[begin]), hi = lo;
    for (std::size_t k = begin; k < end; ++k) {
      const double v = y_(rows()[k]);
      mean += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (lo == hi) return best;
    mean /= static_cast<double>(n);
    double node_ss = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      const double d = y_(rows()[k]) - mean;
      node_ss += d * d;
    }

    // Partial Fisher-Yates picks mtry distinct features.
    std::iota(features_.begin(), features_.end(), 0);
    const std::size_t p = features_.size();
    for (std::size_t k = 0; k < static_cast<std::size_t>(mtry_); ++k) {
      std::swap(features_[k], features_[k + stream_.uniform_index(p - k)]);
    }

    const std::size_t min_leaf = static_cast<std::size_t>(min_leaf_);
    for (std::size_t k = 0; k < static_cast<std::size_t>(mtry_); ++k) {
      const int f = features_[k];
      const auto& list = sorted_[static_cast<std::size_t>(f)];
      // Targets are centered, so the gain of a split is
      // sum_l^2 / n_l + sum_r^2 / n_r with sum_r = -sum_l.
      double left_sum = 0.0;
      double prev = x_(list[begin], f);
      for (std::size_t m = 1; m < n; ++m) {
        left_sum += y_(list[begin + m - 1]) - mean;
        const double next = x_(list[begin + m], f);
        const double last = prev;
        prev = next;
        if (m < min_leaf) continue;
        if (n - m < min_leaf) break;
        if (!(last < next)) continue;
        const double nl = static_cast<double>(m);
        const double nr = static_cast<double>(n - m);
        const double gain = left_sum * left_sum * (1.0 / nl + 1.0 / nr);
        if (gain > best.gain) {
          best.gain = gain;
          best.feature = f;
          best.threshold = 0.5 * (last + next);
          // Guard against the midpoint rounding onto the right-hand value.
          if (!(best.threshold < next)) best.threshold = last;
        }
      }
    }
    if (best.feature >= 0 && !(best.gain > 1e-12 * node_ss)) best.feature = -1;
    return best;
  }

  const Eigen::MatrixXd& x_;
  const Eigen::VectorXd& y_;
  int mtry_;
  int min_leaf_;
  RngStream& stream_;
  std::vector<int> features_;
  std::vector<std::vector<std::int32_t>> order_;   // rows sorted by each feature
  std::vector<std::vector<std::int32_t>> sorted_;  // current sample, per feature
  std::vector<std::int32_t> scratch_;
};

void check_row(const ForestFit& fit, Eigen::Index size) {
  if (size != fit.n_features) {
    throw Error(ErrorCode::Shape, "predict: row has " + std::to_string(size) +
                                      " entries, forest expects " + std::to_string(fit.n_features));
  }
}

}  // namespace

int ForestParams::resolved_mtry(Eigen::Index cols) const {
  if (mtry > 0) return mtry;
  return std::max(1, static_cast<int>(cols / 3));
}

ForestFit fit_forest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ForestParams& params,
                     RngStream& stream) {
  if (x.rows() != y.size()) {
    throw Error(ErrorCode::Shape, "fit_forest: x has " + std::to_string(x.rows()) +
                                      " rows but y has " + std::to_string(y.size()));
  }
  if (params.n_trees < 1) throw Error(ErrorCode::InvalidParameter, "forest.n_trees must be >= 1");
  if (params.min_leaf_size < 1) {
    throw Error(ErrorCode::InvalidParameter, "forest.min_leaf_size must be >= 1");
  }
  const int mtry = params.resolved_mtry(x.cols());
  if (x.cols() < 1 || mtry > x.cols()) {
    throw Error(ErrorCode::InvalidParameter, "forest.mtry must lie in [1, " +
                                                 std::to_string(x.cols()) + "]");
  }
  if (x.rows() < 2 * static_cast<Eigen::Index>(params.min_leaf_size)) {
    throw Error(ErrorCode::InsufficientData, "fit_forest: need at least 2 * min_leaf_size = " +
                                                 std::to_string(2 * params.min_leaf_size) +
                                                 " rows, got " + std::to_string(x.rows()));
  }
  if (!x.allFinite() || !y.allFinite()) {
    throw Error(ErrorCode::InvalidData, "fit_forest: non-finite input");
  }

  ForestFit fit;
  fit.params = params;
  fit.n_features = x.cols();
  fit.trees.reserve(static_cast<std::size_t>(params.n_trees));
  TreeBuilder builder(x, y, mtry, params.min_leaf_size, stream);
  const auto n = static_cast<std::uint64_t>(x.rows());
  std::vector<std::uint32_t> counts(static_cast<std::size_t>(n));
  for (int t = 0; t < params.n_trees; ++t) {
    if (params.bootstrap) {
      std::fill(counts.begin(), counts.end(), 0u);
      for (std::uint64_t k = 0; k < n; ++k) ++counts[stream.uniform_index(n)];
    } else {
      std::fill(counts.begin(), counts.end(), 1u);
    }
    fit.trees.push_back(builder.build(counts));
  }
  return fit;
}

namespace {

template <typename Row>
double average_trees(const ForestFit& fit, const Row& row) {
  double sum = 0.0, lo = 0.0, hi = 0.0;
  bool first = true;
  for (const auto& tree : fit.trees) {
    const double v = tree.predict(row);
    sum += v;
    lo = first ? v : std::min(lo, v);
    hi = first ? v : std::max(hi, v);
    first = false;
  }
  return std::clamp(sum / static_cast<double>(fit.trees.size()), lo, hi);
}

}  // namespace

double predict_row(const ForestFit& fit, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  check_row(fit, row.size());
  return average_trees(fit, row);
}

Eigen::VectorXd predict(const ForestFit& fit, const Eigen::MatrixXd& x) {
  check_row(fit, x.cols());
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = average_trees(fit, x.row(i));
  return out;
}

}  // namespace cfsim
