#include "openima/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace openima {

void BatchLabelMap::validate() const {
    std::size_t n = label.size();
    if (provenance.size() != n || counterpart.size() != n)
        throw std::invalid_argument("batch labels: field sizes disagree");
    for (std::size_t i = 0; i < n; ++i) {
        int c = counterpart[i];
        if (c < 0 || c >= static_cast<int>(n) || c == static_cast<int>(i))
            throw std::invalid_argument("batch labels: bad counterpart at " + std::to_string(i));
        if (counterpart[c] != static_cast<int>(i))
            throw std::invalid_argument("batch labels: counterpart not an involution at " +
                                        std::to_string(i));
        if (label[i] != label[c] || provenance[i] != provenance[c])
            throw std::invalid_argument("batch labels: views of one node disagree at " +
                                        std::to_string(i));
        if ((label[i] < 0) != (provenance[i] == Provenance::None))
            throw std::invalid_argument("batch labels: label/provenance mismatch at " +
                                        std::to_string(i));
    }
}

BatchLabelMap BatchLabelMap::interleaved(const std::vector<int>& node_label,
                                         const std::vector<Provenance>& node_prov) {
    if (node_label.size() != node_prov.size())
        throw std::invalid_argument("batch labels: node label/provenance sizes disagree");
    std::size_t n = node_label.size();
    BatchLabelMap m;
    m.label.resize(2 * n);
    m.provenance.resize(2 * n);
    m.counterpart.resize(2 * n);
    for (std::size_t t = 0; t < n; ++t) {
        m.label[2 * t] = m.label[2 * t + 1] = node_label[t];
        m.provenance[2 * t] = m.provenance[2 * t + 1] = node_prov[t];
        m.counterpart[2 * t] = static_cast<int>(2 * t + 1);
        m.counterpart[2 * t + 1] = static_cast<int>(2 * t);
    }
    return m;
}

BatchLabelMap BatchLabelMap::unlabeled_pairs(std::size_t n_nodes) {
    return interleaved(std::vector<int>(n_nodes, -1),
                       std::vector<Provenance>(n_nodes, Provenance::None));
}

BatchLabelMap BatchLabelMap::erased() const {
    BatchLabelMap m = *this;
    for (std::size_t i = 0; i < m.size(); ++i) {
        m.label[i] = -1;
        m.provenance[i] = Provenance::None;
    }
    return m;
}

BatchLabelMap BatchLabelMap::manual_only() const {
    BatchLabelMap m = *this;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m.provenance[i] != Provenance::Manual) {
            m.label[i] = -1;
            m.provenance[i] = Provenance::None;
        }
    }
    return m;
}

void LossConfig::validate() const {
    if (!(tau > 0.0)) throw std::invalid_argument("loss config: tau must be > 0");
    if (eta < 0.0) throw std::invalid_argument("loss config: eta must be >= 0");
}

double contrastive_general(const Matrix& p, const BatchLabelMap& labels, double tau,
                           Matrix* grad) {
    if (!(tau > 0.0)) throw std::invalid_argument("contrastive: tau must be > 0");
    labels.validate();
    std::size_t n = p.rows();
    if (labels.size() != n)
        throw std::invalid_argument("contrastive: label count != row count");
    if (n < 2) throw std::invalid_argument("contrastive: need at least one view pair");
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(row_norm(p, i) - 1.0) > 1e-8)
            throw std::invalid_argument("contrastive: row " + std::to_string(i) +
                                        " is not unit norm");

    // similarity matrix in temperature units
    Matrix s(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k)
            s(i, k) = dot(p.row(i), p.row(k), p.cols()) / tau;

    Matrix ds;
    if (grad) ds = Matrix(n, n);

    double loss = 0.0;
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        // positives: same label elsewhere in the batch, plus the counterpart
        std::vector<std::size_t> pos;
        if (labels.label[i] >= 0) {
            for (std::size_t j = 0; j < n; ++j)
                if (j != i && labels.label[j] == labels.label[i]) pos.push_back(j);
        }
        std::size_t cp = static_cast<std::size_t>(labels.counterpart[i]);
        bool cp_in = false;
        for (std::size_t j : pos)
            if (j == cp) cp_in = true;
        if (!cp_in) pos.push_back(cp);

        // stable log-sum-exp over k != i
        double m = -1e300;
        for (std::size_t k = 0; k < n; ++k)
            if (k != i) m = std::max(m, s(i, k));
        double denom = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (k == i) continue;
            w[k] = std::exp(s(i, k) - m);
            denom += w[k];
        }
        double log_denom = m + std::log(denom);

        double inv_pos = 1.0 / static_cast<double>(pos.size());
        for (std::size_t j : pos) loss -= inv_pos * (s(i, j) - log_denom);

        if (grad) {
            double coef = 1.0 / static_cast<double>(n);
            for (std::size_t j : pos) ds(i, j) -= coef * inv_pos;
            for (std::size_t k = 0; k < n; ++k)
                if (k != i) ds(i, k) += coef * (w[k] / denom);
        }
    }
    loss /= static_cast<double>(n);

    if (grad) {
        // dP = (dS + dS^T) P / tau
        Matrix g = matmul(ds, p);
        Matrix gt = matmul(transpose(ds), p);
        *grad = scale(add(g, gt), 1.0 / tau);
    }
    return loss;
}

double bpcl_emb(const Matrix& z_views, const BatchLabelMap& labels, double tau) {
    return contrastive_general(l2_normalize_rows(z_views), labels, tau);
}

double bpcl_logit(const Matrix& e_views, const BatchLabelMap& labels, double tau) {
    return contrastive_general(e_views, labels, tau);
}

double ce_loss(const Matrix& raw_logits, const std::vector<int>& labels, Matrix* grad) {
    std::size_t n = raw_logits.rows();
    if (labels.size() != n) throw std::invalid_argument("ce: label count != row count");
    if (n == 0) throw std::invalid_argument("ce: empty batch");
    std::size_t k = raw_logits.cols();
    for (std::size_t i = 0; i < n; ++i)
        if (labels[i] < 0 || labels[i] >= static_cast<int>(k))
            throw std::invalid_argument("ce: point " + std::to_string(i) +
                                        " lacks a manual label in range");
    if (grad) *grad = Matrix(n, k);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = raw_logits.row(i);
        double m = row[0];
        for (std::size_t c = 1; c < k; ++c) m = std::max(m, row[c]);
        double denom = 0.0;
        for (std::size_t c = 0; c < k; ++c) denom += std::exp(row[c] - m);
        double log_denom = m + std::log(denom);
        loss += log_denom - row[labels[i]];
        if (grad) {
            for (std::size_t c = 0; c < k; ++c)
                (*grad)(i, c) = std::exp(row[c] - m) / denom / static_cast<double>(n);
            (*grad)(i, labels[i]) -= 1.0 / static_cast<double>(n);
        }
    }
    return loss / static_cast<double>(n);
}

double total_objective(double bpcl_emb_part, double bpcl_logit_part, double ce_part,
                       const LossConfig& config) {
    config.validate();
    double total = 0.0;
    if (config.use_bpcl_emb) total += bpcl_emb_part;
    if (config.use_bpcl_logit) total += bpcl_logit_part;
    if (config.use_ce) total += config.eta * ce_part;
    return total;
}

double infonce(const Matrix& z_views, double tau) {
    if (z_views.rows() % 2 != 0) throw std::invalid_argument("infonce: odd row count");
    return bpcl_emb(z_views, BatchLabelMap::unlabeled_pairs(z_views.rows() / 2), tau);
}

double supcon(const Matrix& z_views, const BatchLabelMap& labels, double tau) {
    return bpcl_emb(z_views, labels.manual_only(), tau);
}

ad::Var contrastive_op(ad::Tape& tape, ad::Var p_rows, const BatchLabelMap& labels,
                       double tau) {
    Matrix grad;
    double value = contrastive_general(tape.value(p_rows), labels, tau, &grad);
    return tape.custom_scalar(value, {p_rows}, {std::move(grad)});
}

ad::Var ce_op(ad::Tape& tape, ad::Var raw_logits, const std::vector<std::size_t>& rows,
              const std::vector<int>& labels) {
    const Matrix& all = tape.value(raw_logits);
    Matrix sel(rows.size(), all.cols());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < all.cols(); ++c) sel(r, c) = all(rows[r], c);
    Matrix grad_sel;
    double value = ce_loss(sel, labels, &grad_sel);
    Matrix grad(all.rows(), all.cols());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < all.cols(); ++c) grad(rows[r], c) += grad_sel(r, c);
    return tape.custom_scalar(value, {raw_logits}, {std::move(grad)});
}

}  // namespace openima
