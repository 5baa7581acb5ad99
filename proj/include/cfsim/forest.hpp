#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "cfsim/prng.hpp"

namespace cfsim {

struct ForestParams {
  int n_trees = 100;
  int mtry = 0;  // 0 selects max(1, cols / 3)
  int min_leaf_size = 5;
  bool bootstrap = true;

  int resolved_mtry(Eigen::Index cols) const;

  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

// Flat CART regression tree; a node with feature < 0 is a leaf.
struct RegressionTree {
  struct Node {
    int feature = -1;
    double threshold = 0.0;  // rows with x[feature] <= threshold go left
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;
  };
  std::vector<Node> nodes;

  template <typename Row>
  double predict(const Row& row) const {
    std::int32_t k = 0;
    while (nodes[k].feature >= 0) {
      const Node& n = nodes[k];
      k = row(n.feature) <= n.threshold ? n.left : n.right;
    }
    return nodes[k].value;
  }
};

struct ForestFit {
  std::vector<RegressionTree> trees;
  ForestParams params;
  Eigen::Index n_features = 0;
};

/// Bagged regression trees with per-node feature subsampling.
///
/// Each node draws mtry features without replacement and takes the split with
/// the largest reduction in sum of squared deviations such that both children
/// keep at least min_leaf_size rows. Thresholds are midpoints between
/// consecutive distinct values. A node becomes a leaf (target mean) when no
/// admissible split lowers its sum of squares.
ForestFit fit_forest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ForestParams& params,
                     RngStream& stream);

double predict_row(const ForestFit& fit, const Eigen::Ref<const Eigen::RowVectorXd>& row);
Eigen::VectorXd predict(const ForestFit& fit, const Eigen::MatrixXd& x);

}  // namespace cfsim
