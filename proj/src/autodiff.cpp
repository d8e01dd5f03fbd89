#include "openima/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace openima::ad {

namespace {
const Matrix kEmpty;
}

int Tape::push(Matrix value, bool track, Backprop bp) {
    nodes_.push_back(Node{std::move(value), Matrix(), track, std::move(bp)});
    return static_cast<int>(nodes_.size()) - 1;
}

const Tape::Node& Tape::node(Var v) const {
    if (!v.valid() || v.id >= static_cast<int>(nodes_.size()))
        throw std::invalid_argument("tape: invalid var");
    return nodes_[v.id];
}

const Matrix& Tape::value(Var v) const { return node(v).value; }

const Matrix& Tape::grad(Var v) const {
    const Node& n = node(v);
    return n.grad.empty() ? kEmpty : n.grad;
}

bool Tape::has_grad(Var v) const { return !node(v).grad.empty(); }

Matrix& Tape::grad_ref(int id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad = Matrix(n.value.rows(), n.value.cols());
    return n.grad;
}

void Tape::accumulate(int id, const Matrix& g) {
    Node& n = nodes_[id];
    if (!n.track && !n.backprop) return;  // constants never need gradients
    Matrix& dst = grad_ref(id);
    for (std::size_t i = 0; i < dst.data().size(); ++i) dst.data()[i] += g.data()[i];
}

Var Tape::constant(Matrix value) { return Var{push(std::move(value), false, nullptr)}; }

Var Tape::leaf(Matrix value) { return Var{push(std::move(value), true, nullptr)}; }

Var Tape::matmul(Var a, Var b) {
    Matrix out = openima::matmul(value(a), value(b));
    int ia = a.id, ib = b.id;
    return Var{push(std::move(out), false, [ia, ib](Tape& t, int self) {
        const Matrix& g = t.nodes_[self].grad;
        t.accumulate(ia, openima::matmul(g, transpose(t.nodes_[ib].value)));
        t.accumulate(ib, openima::matmul(transpose(t.nodes_[ia].value), g));
    })};
}

Var Tape::add(Var a, Var b) { return add_scaled(a, b, 1.0, 1.0); }

Var Tape::add_scaled(Var a, Var b, double ca, double cb) {
    const Matrix& va = value(a);
    const Matrix& vb = value(b);
    if (!va.same_shape(vb))
        throw std::invalid_argument("tape add: shape mismatch (" + va.shape_str() + " vs " +
                                    vb.shape_str() + ")");
    Matrix out = va;
    for (std::size_t i = 0; i < out.data().size(); ++i)
        out.data()[i] = ca * va.data()[i] + cb * vb.data()[i];
    int ia = a.id, ib = b.id;
    return Var{push(std::move(out), false, [ia, ib, ca, cb](Tape& t, int self) {
        const Matrix& g = t.nodes_[self].grad;
        t.accumulate(ia, openima::scale(g, ca));
        t.accumulate(ib, openima::scale(g, cb));
    })};
}

Var Tape::scale(Var a, double c) {
    Matrix out = openima::scale(value(a), c);
    int ia = a.id;
    return Var{push(std::move(out), false, [ia, c](Tape& t, int self) {
        t.accumulate(ia, openima::scale(t.nodes_[self].grad, c));
    })};
}

Var Tape::mul_elem(Var a, Matrix mask) {
    Matrix out = hadamard(value(a), mask);
    int ia = a.id;
    return Var{push(std::move(out), false, [ia, mask = std::move(mask)](Tape& t, int self) {
        t.accumulate(ia, hadamard(t.nodes_[self].grad, mask));
    })};
}

Var Tape::leaky_relu(Var a, double slope) {
    const Matrix& va = value(a);
    Matrix out = va;
    for (double& v : out.data()) v = v > 0.0 ? v : slope * v;
    int ia = a.id;
    return Var{push(std::move(out), false, [ia, slope](Tape& t, int self) {
        const Matrix& g = t.nodes_[self].grad;
        const Matrix& x = t.nodes_[ia].value;
        Matrix dx(g.rows(), g.cols());
        for (std::size_t i = 0; i < dx.data().size(); ++i)
            dx.data()[i] = g.data()[i] * (x.data()[i] > 0.0 ? 1.0 : slope);
        t.accumulate(ia, dx);
    })};
}

Var Tape::elu(Var a) {
    const Matrix& va = value(a);
    Matrix out = va;
    for (double& v : out.data()) v = v > 0.0 ? v : std::exp(v) - 1.0;
    int ia = a.id;
    return Var{push(std::move(out), false, [ia](Tape& t, int self) {
        const Matrix& g = t.nodes_[self].grad;
        const Matrix& x = t.nodes_[ia].value;
        Matrix dx(g.rows(), g.cols());
        for (std::size_t i = 0; i < dx.data().size(); ++i)
            dx.data()[i] = g.data()[i] * (x.data()[i] > 0.0 ? 1.0 : std::exp(x.data()[i]));
        t.accumulate(ia, dx);
    })};
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
    std::size_t rows = value(parts[0]).rows();
    std::size_t cols = 0;
    for (Var p : parts) {
        if (value(p).rows() != rows)
            throw std::invalid_argument("concat_cols: row count mismatch");
        cols += value(p).cols();
    }
    Matrix out(rows, cols);
    std::size_t off = 0;
    std::vector<int> ids;
    std::vector<std::size_t> widths;
    for (Var p : parts) {
        const Matrix& v = value(p);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < v.cols(); ++c) out(r, off + c) = v(r, c);
        ids.push_back(p.id);
        widths.push_back(v.cols());
        off += v.cols();
    }
    return Var{push(std::move(out), false, [ids, widths](Tape& t, int self) {
        const Matrix& g = t.nodes_[self].grad;
        std::size_t off = 0;
        for (std::size_t p = 0; p < ids.size(); ++p) {
            Matrix part(g.rows(), widths[p]);
            for (std::size_t r = 0; r < g.rows(); ++r)
                for (std::size_t c = 0; c < widths[p]; ++c) part(r, c) = g(r, off + c);
            t.accumulate(ids[p], part);
            off += widths[p];
        }
    })};
}

Var Tape::concat_rows(Var a, Var b) {
    const Matrix& va = value(a);
    const Matrix& vb = value(b);
    if (va.cols() != vb.cols()) throw std::invalid_argument("concat_rows: col count mismatch");
    Matrix out(va.rows() + vb.rows(), va.cols());
    for (std::size_t r = 0; r < va.rows(); ++r)
        for (std::size_t c = 0; c < va.cols(); ++c) out(r, c) = va(r, c);
    for (std::size_t r = 0; r < vb.rows(); ++r)
        for (std::size_t c = 0; c < vb.cols(); ++c) out(va.rows() + r, c) = vb(r, c);
    int ia = a.id, ib = b.id;
    std::size_t split = va.rows();
    return Var{push(std::move(out), false, [ia, ib, split](Tape& t, int self) {
        const Matrix& g = t.nodes_[self].grad;
        Matrix ga(split, g.cols());
        Matrix gb(g.rows() - split, g.cols());
        for (std::size_t r = 0; r < split; ++r)
            for (std::size_t c = 0; c < g.cols(); ++c) ga(r, c) = g(r, c);
        for (std::size_t r = split; r < g.rows(); ++r)
            for (std::size_t c = 0; c < g.cols(); ++c) gb(r - split, c) = g(r, c);
        t.accumulate(ia, ga);
        t.accumulate(ib, gb);
    })};
}

Var Tape::gather_rows(Var a, std::vector<std::size_t> rows) {
    const Matrix& va = value(a);
    Matrix out(rows.size(), va.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] >= va.rows()) throw std::invalid_argument("gather_rows: index out of range");
        for (std::size_t c = 0; c < va.cols(); ++c) out(r, c) = va(rows[r], c);
    }
    int ia = a.id;
    return Var{push(std::move(out), false, [ia, rows = std::move(rows)](Tape& t, int self) {
        const Matrix& g = t.nodes_[self].grad;
        Matrix dx(t.nodes_[ia].value.rows(), g.cols());
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t c = 0; c < g.cols(); ++c) dx(rows[r], c) += g(r, c);
        t.accumulate(ia, dx);
    })};
}

Var Tape::l2_normalize_rows(Var a, double eps) {
    const Matrix& va = value(a);
    Matrix out = va;
    std::vector<double> norms(va.rows());
    for (std::size_t r = 0; r < va.rows(); ++r) {
        norms[r] = row_norm(va, r);
        if (norms[r] < eps) continue;  // degenerate row passes through
        double inv = 1.0 / norms[r];
        for (std::size_t c = 0; c < va.cols(); ++c) out(r, c) *= inv;
    }
    int ia = a.id;
    return Var{push(std::move(out), false, [ia, eps, norms = std::move(norms)](Tape& t, int self) {
        const Matrix& g = t.nodes_[self].grad;
        const Matrix& y = t.nodes_[self].value;
        Matrix dx(g.rows(), g.cols());
        for (std::size_t r = 0; r < g.rows(); ++r) {
            if (norms[r] < eps) {
                for (std::size_t c = 0; c < g.cols(); ++c) dx(r, c) = g(r, c);
                continue;
            }
            double gy = dot(g.row(r), y.row(r), g.cols());
            double inv = 1.0 / norms[r];
            for (std::size_t c = 0; c < g.cols(); ++c)
                dx(r, c) = (g(r, c) - gy * y(r, c)) * inv;
        }
        t.accumulate(ia, dx);
    })};
}

Var Tape::edge_scores(Var h, Var a_self, Var a_neigh,
                      std::vector<std::size_t> offsets, std::vector<std::uint32_t> sources) {
    const Matrix& vh = value(h);
    const Matrix& vs = value(a_self);
    const Matrix& vn = value(a_neigh);
    if (vs.rows() != vh.cols() || vs.cols() != 1 || !vs.same_shape(vn))
        throw std::invalid_argument("edge_scores: attention vector shape mismatch");
    std::size_t n_slots = sources.size();
    Matrix out(n_slots, 1);
    std::size_t dim = vh.cols();
    for (std::size_t i = 0; i + 1 < offsets.size(); ++i) {
        double self_part = dot(vs.data().data(), vh.row(i), dim);
        for (std::size_t e = offsets[i]; e < offsets[i + 1]; ++e)
            out(e, 0) = self_part + dot(vn.data().data(), vh.row(sources[e]), dim);
    }
    int ih = h.id, is = a_self.id, in = a_neigh.id;
    return Var{push(std::move(out), false,
                    [ih, is, in, offsets = std::move(offsets),
                     sources = std::move(sources)](Tape& t, int self) {
        const Matrix& g = t.nodes_[self].grad;
        const Matrix& vh = t.nodes_[ih].value;
        const Matrix& vs = t.nodes_[is].value;
        const Matrix& vn = t.nodes_[in].value;
        std::size_t dim = vh.cols();
        Matrix dh(vh.rows(), dim);
        Matrix ds(dim, 1);
        Matrix dn(dim, 1);
        for (std::size_t i = 0; i + 1 < offsets.size(); ++i) {
            for (std::size_t e = offsets[i]; e < offsets[i + 1]; ++e) {
                double ge = g(e, 0);
                if (ge == 0.0) continue;
                std::uint32_t j = sources[e];
                for (std::size_t f = 0; f < dim; ++f) {
                    dh(i, f) += ge * vs(f, 0);
                    dh(j, f) += ge * vn(f, 0);
                    ds(f, 0) += ge * vh(i, f);
                    dn(f, 0) += ge * vh(j, f);
                }
            }
        }
        t.accumulate(ih, dh);
        t.accumulate(is, ds);
        t.accumulate(in, dn);
    })};
}

Var Tape::segment_softmax(Var scores, std::vector<std::size_t> offsets) {
    const Matrix& vs = value(scores);
    Matrix out(vs.rows(), 1);
    for (std::size_t i = 0; i + 1 < offsets.size(); ++i) {
        std::size_t b = offsets[i], e = offsets[i + 1];
        if (b == e) continue;
        double m = vs(b, 0);
        for (std::size_t k = b + 1; k < e; ++k) m = std::max(m, vs(k, 0));
        double sum = 0.0;
        for (std::size_t k = b; k < e; ++k) {
            out(k, 0) = std::exp(vs(k, 0) - m);
            sum += out(k, 0);
        }
        for (std::size_t k = b; k < e; ++k) out(k, 0) /= sum;
    }
    int is = scores.id;
    return Var{push(std::move(out), false,
                    [is, offsets = std::move(offsets)](Tape& t, int self) {
        const Matrix& g = t.nodes_[self].grad;
        const Matrix& alpha = t.nodes_[self].value;
        Matrix dx(g.rows(), 1);
        for (std::size_t i = 0; i + 1 < offsets.size(); ++i) {
            std::size_t b = offsets[i], e = offsets[i + 1];
            double inner = 0.0;
            for (std::size_t k = b; k < e; ++k) inner += g(k, 0) * alpha(k, 0);
            for (std::size_t k = b; k < e; ++k)
                dx(k, 0) = alpha(k, 0) * (g(k, 0) - inner);
        }
        t.accumulate(is, dx);
    })};
}

Var Tape::segment_weighted_sum(Var weights, Var h,
                               std::vector<std::size_t> offsets,
                               std::vector<std::uint32_t> sources) {
    const Matrix& vw = value(weights);
    const Matrix& vh = value(h);
    std::size_t n_out = offsets.size() - 1;
    std::size_t dim = vh.cols();
    Matrix out(n_out, dim);
    for (std::size_t i = 0; i < n_out; ++i)
        for (std::size_t e = offsets[i]; e < offsets[i + 1]; ++e) {
            double w = vw(e, 0);
            const double* src = vh.row(sources[e]);
            for (std::size_t f = 0; f < dim; ++f) out(i, f) += w * src[f];
        }
    int iw = weights.id, ih = h.id;
    return Var{push(std::move(out), false,
                    [iw, ih, offsets = std::move(offsets),
                     sources = std::move(sources)](Tape& t, int self) {
        const Matrix& g = t.nodes_[self].grad;
        const Matrix& vw = t.nodes_[iw].value;
        const Matrix& vh = t.nodes_[ih].value;
        std::size_t dim = vh.cols();
        Matrix dw(vw.rows(), 1);
        Matrix dh(vh.rows(), dim);
        for (std::size_t i = 0; i + 1 < offsets.size(); ++i) {
            const double* grow = g.row(i);
            for (std::size_t e = offsets[i]; e < offsets[i + 1]; ++e) {
                std::uint32_t j = sources[e];
                dw(e, 0) = dot(grow, vh.row(j), dim);
                double w = vw(e, 0);
                double* dhj = dh.row(j);
                for (std::size_t f = 0; f < dim; ++f) dhj[f] += w * grow[f];
            }
        }
        t.accumulate(iw, dw);
        t.accumulate(ih, dh);
    })};
}

Var Tape::custom_scalar(double value, const std::vector<Var>& parents,
                        std::vector<Matrix> parent_grads) {
    if (parents.size() != parent_grads.size())
        throw std::invalid_argument("custom_scalar: parent/grad count mismatch");
    std::vector<int> ids;
    for (Var p : parents) ids.push_back(p.id);
    return Var{push(Matrix(1, 1, value), false,
                    [ids, grads = std::move(parent_grads)](Tape& t, int self) {
        double g = t.nodes_[self].grad(0, 0);
        for (std::size_t p = 0; p < ids.size(); ++p)
            t.accumulate(ids[p], openima::scale(grads[p], g));
    })};
}

void Tape::backward(Var root) {
    const Matrix& rv = value(root);
    if (rv.rows() != 1 || rv.cols() != 1)
        throw std::invalid_argument("backward: root must be a scalar, got " + rv.shape_str());
    for (Node& n : nodes_) n.grad = Matrix();
    nodes_[root.id].grad = Matrix(1, 1, 1.0);
    for (int i = root.id; i >= 0; --i) {
        Node& n = nodes_[i];
        if (n.backprop && !n.grad.empty()) n.backprop(*this, i);
    }
}

}  // namespace openima::ad
