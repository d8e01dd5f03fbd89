#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "openima/matrix.hpp"

namespace openima::ad {

struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode tape over Matrix values. Nodes are appended in evaluation
// order, so walking them backwards is a valid topological order. Scalars
// are 1x1 matrices. Backprop closures capture node ids only (never
// pointers into the tape), so a Tape can be moved safely.
class Tape {
public:
    using Backprop = std::function<void(Tape&, int self)>;

    Var constant(Matrix value);  // gradient never tracked
    Var leaf(Matrix value);      // gradient accumulated

    Var matmul(Var a, Var b);
    Var add(Var a, Var b);
    Var add_scaled(Var a, Var b, double ca, double cb);
    Var scale(Var a, double c);
    Var mul_elem(Var a, Matrix mask);  // constant elementwise factor
    Var leaky_relu(Var a, double slope);
    Var elu(Var a);
    Var concat_cols(const std::vector<Var>& parts);
    Var concat_rows(Var a, Var b);
    Var gather_rows(Var a, std::vector<std::size_t> rows);
    Var l2_normalize_rows(Var a, double eps = 1e-12);

    // Attention primitives. `offsets` gives, per destination node, the
    // half-open range of incoming slots; `sources` the message source row
    // of each slot.
    // score_e = dot(a_self, h[dst_e]) + dot(a_neigh, h[src_e])
    Var edge_scores(Var h, Var a_self, Var a_neigh,
                    std::vector<std::size_t> offsets, std::vector<std::uint32_t> sources);
    // softmax within each [offsets[i], offsets[i+1]) segment
    Var segment_softmax(Var scores, std::vector<std::size_t> offsets);
    // out[i] = sum over slots e of segment i of w_e * h[src_e]
    Var segment_weighted_sum(Var weights, Var h,
                             std::vector<std::size_t> offsets,
                             std::vector<std::uint32_t> sources);

    // Extension point for ops with externally computed gradients (the
    // loss heads use this). `parent_grads` holds d(value)/d(parent)
    // contributions already multiplied out except for the upstream scalar.
    Var custom_scalar(double value, const std::vector<Var>& parents,
                      std::vector<Matrix> parent_grads);

    const Matrix& value(Var v) const;
    const Matrix& grad(Var v) const;  // empty matrix when no gradient reached v
    bool has_grad(Var v) const;

    void backward(Var root);  // root must be 1x1; clears previous gradients

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        bool track = false;
        Backprop backprop;
    };

    int push(Matrix value, bool track, Backprop bp);
    void accumulate(int id, const Matrix& g);
    Matrix& grad_ref(int id);
    const Node& node(Var v) const;

    std::vector<Node> nodes_;
};

}  // namespace openima::ad
