#pragma once

#include <string>
#include <vector>

#include "siren/matrix.hpp"

namespace siren {

// Alignment-free sequence loss over per-frame logits (T x V, raw scores).
// Loss is the negative log-likelihood of the label sequence; the gradient is
// w.r.t. the logits (softmax included).
struct CtcEvaluation {
    double nll = 0.0;
    Matrix logit_grad;  // T x V
};

double ctc_loss(const Matrix& logits, const std::vector<int>& labels, int blank);
CtcEvaluation ctc_loss_with_grad(const Matrix& logits, const std::vector<int>& labels, int blank);

// Per-frame argmax, collapse repeats, drop blanks.
std::vector<int> ctc_greedy_tokens(const Matrix& logits, int blank);

}  // namespace siren
