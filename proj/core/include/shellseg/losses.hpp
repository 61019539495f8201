#pragma once

#include <span>
#include <vector>

#include "shellseg/model.hpp"
#include "shellseg/pointcloud.hpp"

namespace shellseg {

struct LossResult {
  double value = 0.0;
  Matrix grad;  // same shape as the loss input
};

Matrix softmax_rows(const Matrix& logits);

// Mean negative log-likelihood over points whose target is not ignored.
// Gradient is (softmax - onehot) / count on scored rows, zero elsewhere.
LossResult cross_entropy(const Matrix& logits, std::span<const Label> targets);

// Lovasz extension of the Jaccard loss for one class, given per-point
// errors and foreground flags. Returns the loss and d(loss)/d(error).
double lovasz_class_loss(std::span<const double> errors, const std::vector<bool>& foreground,
                         std::vector<double>* grad_errors = nullptr);

// Lovasz-Softmax on probability rows, averaged over classes present among
// the scored targets. Rows must sum to 1 within 1e-9.
LossResult lovasz_softmax(const Matrix& probabilities, std::span<const Label> targets);

// cross_entropy(logits) + lovasz_softmax(softmax(logits)); gradient w.r.t.
// logits.
LossResult total_loss(const Matrix& logits, std::span<const Label> targets);

}  // namespace shellseg
