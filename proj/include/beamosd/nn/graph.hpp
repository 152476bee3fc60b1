#pragma once

#include <deque>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "beamosd/common.hpp"

namespace beamosd {

// Static computation graph with reverse-mode gradients. Nodes are created
// once (shapes fixed); forward() re-evaluates every op in creation order and
// backward() sweeps the same tape in reverse, so one graph instance serves
// many samples without re-allocation. The scalar type is a template
// parameter: models train in float and run their gradient checks on an
// identically built double twin.

template <typename T>
struct Node {
  std::vector<int> dims;
  std::vector<T> val;
  std::vector<T> grad;
  bool is_param = false;
  std::string name;  // parameters only
  std::function<void()> fwd;
  std::function<void()> bwd;

  int size() const {
    int n = 1;
    for (int d : dims) n *= d;
    return n;
  }
  int rows() const { return dims.empty() ? 0 : dims[0]; }
  int cols() const { return dims.size() < 2 ? 1 : dims[1]; }
};

template <typename T>
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  int leaf(std::vector<int> dims) { return add(std::move(dims)); }

  int param(std::vector<int> dims, std::string name) {
    int id = add(std::move(dims));
    nodes_[id].is_param = true;
    nodes_[id].name = std::move(name);
    params_.push_back(id);
    return id;
  }

  int op(std::vector<int> dims, std::function<void()> fwd,
         std::function<void()> bwd) {
    int id = add(std::move(dims));
    nodes_[id].fwd = std::move(fwd);
    nodes_[id].bwd = std::move(bwd);
    return id;
  }

  Node<T>& at(int id) { return nodes_[id]; }
  const Node<T>& at(int id) const { return nodes_[id]; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  const std::vector<int>& params() const { return params_; }

  void forward() {
    for (auto& n : nodes_)
      if (n.fwd) n.fwd();
  }

  // Zeroes every non-parameter gradient, seeds the root, then runs the tape
  // backwards. Parameter gradients accumulate across calls until
  // zero_param_grads(), which is what mini-batch accumulation relies on.
  void backward(int root, T seed) {
    for (auto& n : nodes_)
      if (!n.is_param) std::fill(n.grad.begin(), n.grad.end(), T(0));
    require(nodes_[root].size() == 1, "backward: root must be scalar");
    nodes_[root].grad[0] = seed;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it)
      if (it->bwd) it->bwd();
  }

  void zero_param_grads() {
    for (int id : params_)
      std::fill(nodes_[id].grad.begin(), nodes_[id].grad.end(), T(0));
  }

 private:
  int add(std::vector<int> dims) {
    require(!dims.empty(), "Graph: node needs at least one dimension");
    int n = 1;
    for (int d : dims) {
      require(d >= 1, "Graph: dimensions must be positive");
      n *= d;
    }
    // deque keeps node addresses stable, so op lambdas may capture Node*.
    nodes_.emplace_back();
    nodes_.back().dims = std::move(dims);
    nodes_.back().val.assign(n, T(0));
    nodes_.back().grad.assign(n, T(0));
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::deque<Node<T>> nodes_;
  std::vector<int> params_;
};

}  // namespace beamosd
