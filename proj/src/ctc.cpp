#include "siren/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "siren/errors.hpp"

namespace siren {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    double m = std::max(a, b);
    return m + std::log1p(std::exp(std::min(a, b) - m));
}

// Extended label sequence with blanks between and around labels.
std::vector<int> extend_labels(const std::vector<int>& labels, int blank) {
    std::vector<int> ext(2 * labels.size() + 1, blank);
    for (size_t i = 0; i < labels.size(); ++i) ext[2 * i + 1] = labels[i];
    return ext;
}

Matrix log_softmax(const Matrix& logits) {
    Matrix out(logits.rows, logits.cols);
    for (size_t t = 0; t < logits.rows; ++t) {
        const double* row = logits.row(t);
        double m = *std::max_element(row, row + logits.cols);
        double z = 0.0;
        for (size_t k = 0; k < logits.cols; ++k) z += std::exp(row[k] - m);
        double logz = m + std::log(z);
        for (size_t k = 0; k < logits.cols; ++k) out.at(t, k) = row[k] - logz;
    }
    return out;
}

struct ForwardResult {
    Matrix alpha;  // T x S, log domain
    double log_prob = kNegInf;
};

ForwardResult ctc_forward(const Matrix& logp, const std::vector<int>& ext) {
    size_t t_frames = logp.rows;
    size_t s_states = ext.size();
    ForwardResult res;
    res.alpha = Matrix(t_frames, s_states, kNegInf);

    res.alpha.at(0, 0) = logp.at(0, ext[0]);
    if (s_states > 1) res.alpha.at(0, 1) = logp.at(0, ext[1]);

    for (size_t t = 1; t < t_frames; ++t) {
        for (size_t s = 0; s < s_states; ++s) {
            double acc = res.alpha.at(t - 1, s);
            if (s >= 1) acc = log_add(acc, res.alpha.at(t - 1, s - 1));
            if (s >= 2 && ext[s] != ext[s - 2]) acc = log_add(acc, res.alpha.at(t - 1, s - 2));
            res.alpha.at(t, s) = acc == kNegInf ? kNegInf : acc + logp.at(t, ext[s]);
        }
    }

    res.log_prob = res.alpha.at(t_frames - 1, s_states - 1);
    if (s_states > 1) res.log_prob = log_add(res.log_prob, res.alpha.at(t_frames - 1, s_states - 2));
    return res;
}

// beta[t][s]: log probability of completing the alignment from state s given
// the emission at t is not yet consumed. alpha[t][s] + beta[t][s] sums over
// all paths through s at time t.
Matrix ctc_backward(const Matrix& logp, const std::vector<int>& ext) {
    size_t t_frames = logp.rows;
    size_t s_states = ext.size();
    Matrix beta(t_frames, s_states, kNegInf);

    beta.at(t_frames - 1, s_states - 1) = 0.0;
    if (s_states > 1) beta.at(t_frames - 1, s_states - 2) = 0.0;

    for (size_t t = t_frames - 1; t-- > 0;) {
        for (size_t s = 0; s < s_states; ++s) {
            double acc = beta.at(t + 1, s) == kNegInf
                             ? kNegInf
                             : beta.at(t + 1, s) + logp.at(t + 1, ext[s]);
            if (s + 1 < s_states && beta.at(t + 1, s + 1) != kNegInf)
                acc = log_add(acc, beta.at(t + 1, s + 1) + logp.at(t + 1, ext[s + 1]));
            if (s + 2 < s_states && ext[s] != ext[s + 2] && beta.at(t + 1, s + 2) != kNegInf)
                acc = log_add(acc, beta.at(t + 1, s + 2) + logp.at(t + 1, ext[s + 2]));
            beta.at(t, s) = acc;
        }
    }
    return beta;
}

void check_inputs(const Matrix& logits, const std::vector<int>& labels, int blank) {
    if (logits.rows == 0 || logits.cols == 0)
        fail(ErrorCode::InvalidArgument, "ctc: empty logit matrix");
    if (blank < 0 || static_cast<size_t>(blank) >= logits.cols)
        fail(ErrorCode::InvalidArgument, "ctc: blank index out of range");
    for (int l : labels) {
        if (l < 0 || static_cast<size_t>(l) >= logits.cols || l == blank)
            fail(ErrorCode::InvalidArgument, "ctc: label index out of range");
    }
    // Minimum frames: every label plus a blank between equal neighbors.
    size_t needed = labels.size();
    for (size_t i = 1; i < labels.size(); ++i)
        if (labels[i] == labels[i - 1]) ++needed;
    if (logits.rows < needed)
        fail(ErrorCode::AudioTooShort, "ctc: fewer frames than label sequence requires");
}

}  // namespace

double ctc_loss(const Matrix& logits, const std::vector<int>& labels, int blank) {
    check_inputs(logits, labels, blank);
    Matrix logp = log_softmax(logits);
    auto ext = extend_labels(labels, blank);
    return -ctc_forward(logp, ext).log_prob;
}

CtcEvaluation ctc_loss_with_grad(const Matrix& logits, const std::vector<int>& labels, int blank) {
    check_inputs(logits, labels, blank);
    Matrix logp = log_softmax(logits);
    auto ext = extend_labels(labels, blank);
    ForwardResult fwd = ctc_forward(logp, ext);
    Matrix beta = ctc_backward(logp, ext);

    CtcEvaluation out;
    out.nll = -fwd.log_prob;
    out.logit_grad = Matrix(logits.rows, logits.cols, 0.0);
    if (fwd.log_prob == kNegInf)
        fail(ErrorCode::NonFiniteGradient, "ctc: no feasible alignment for label sequence");

    // dNLL/dlogit = softmax - occupancy posterior.
    for (size_t t = 0; t < logits.rows; ++t) {
        std::vector<double> post(logits.cols, kNegInf);
        for (size_t s = 0; s < ext.size(); ++s) {
            double joint = fwd.alpha.at(t, s) + beta.at(t, s);
            if (joint != kNegInf) post[ext[s]] = log_add(post[ext[s]], joint);
        }
        for (size_t k = 0; k < logits.cols; ++k) {
            double gamma = post[k] == kNegInf ? 0.0 : std::exp(post[k] - fwd.log_prob);
            out.logit_grad.at(t, k) = std::exp(logp.at(t, k)) - gamma;
        }
    }
    return out;
}

std::vector<int> ctc_greedy_tokens(const Matrix& logits, int blank) {
    std::vector<int> out;
    int prev = blank;
    for (size_t t = 0; t < logits.rows; ++t) {
        const double* row = logits.row(t);
        int best = static_cast<int>(std::max_element(row, row + logits.cols) - row);
        if (best != blank && best != prev) out.push_back(best);
        prev = best;
    }
    return out;
}

}  // namespace siren
