#include "shellseg/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "shellseg/error.hpp"

namespace shellseg {

namespace {

std::size_t check_targets(const Matrix& m, std::span<const Label> targets) {
  if (static_cast<std::size_t>(m.rows()) != targets.size()) {
    throw InvalidArgument("loss: row count does not match target count");
  }
  std::size_t scored = 0;
  for (auto t : targets) {
    if (t == kIgnoreLabel) continue;
    if (t >= m.cols()) throw InvalidArgument("loss: target " + std::to_string(t) + " out of range");
    ++scored;
  }
  if (scored == 0) throw InvalidArgument("loss: every point is ignored");
  return scored;
}

}  // namespace

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - mx).exp().matrix();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

LossResult cross_entropy(const Matrix& logits, std::span<const Label> targets) {
  const auto scored = static_cast<double>(check_targets(logits, targets));
  LossResult out;
  out.grad = Matrix::Zero(logits.rows(), logits.cols());
  long double sum = 0.0L;  // extended accumulator keeps finite-difference checks clean
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const Label t = targets[static_cast<std::size_t>(i)];
    if (t == kIgnoreLabel) continue;
    const double mx = logits.row(i).maxCoeff();
    const double lse = mx + std::log((logits.row(i).array() - mx).exp().sum());
    sum += static_cast<long double>(lse) - logits(i, t);
    out.grad.row(i) = (logits.row(i).array() - lse).exp().matrix();
    out.grad(i, t) -= 1.0;
  }
  out.value = static_cast<double>(sum / scored);
  out.grad /= scored;
  return out;
}

double lovasz_class_loss(std::span<const double> errors, const std::vector<bool>& foreground,
                         std::vector<double>* grad_errors) {
  const auto n = errors.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return errors[a] > errors[b]; });
  double gts = 0.0;
  for (bool f : foreground) gts += f ? 1.0 : 0.0;

  if (grad_errors) grad_errors->assign(n, 0.0);
  long double loss = 0.0L;
  double prev_jaccard = 0.0, cum_fg = 0.0, cum_bg = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto i = order[k];
    if (foreground[i]) {
      cum_fg += 1.0;
    } else {
      cum_bg += 1.0;
    }
    const double intersection = gts - cum_fg;
    const double union_ = gts + cum_bg;
    const double jaccard = 1.0 - intersection / union_;
    const double weight = jaccard - prev_jaccard;
    prev_jaccard = jaccard;
    loss += static_cast<long double>(errors[i]) * weight;
    if (grad_errors) (*grad_errors)[i] = weight;
  }
  return static_cast<double>(loss);
}

LossResult lovasz_softmax(const Matrix& probabilities, std::span<const Label> targets) {
  check_targets(probabilities, targets);
  for (Eigen::Index i = 0; i < probabilities.rows(); ++i) {
    if (targets[static_cast<std::size_t>(i)] == kIgnoreLabel) continue;
    if (std::abs(probabilities.row(i).sum() - 1.0) > 1e-9) {
      throw InvalidArgument("lovasz_softmax: row " + std::to_string(i) + " is not a probability vector");
    }
  }
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < probabilities.rows(); ++i) {
    if (targets[static_cast<std::size_t>(i)] != kIgnoreLabel) rows.push_back(i);
  }
  const auto classes = probabilities.cols();
  std::vector<bool> present(static_cast<std::size_t>(classes), false);
  for (auto r : rows) present[targets[static_cast<std::size_t>(r)]] = true;
  const double num_present = static_cast<double>(std::count(present.begin(), present.end(), true));

  LossResult out;
  out.grad = Matrix::Zero(probabilities.rows(), classes);
  std::vector<double> errors(rows.size()), grad;
  std::vector<bool> fg(rows.size());
  for (Eigen::Index c = 0; c < classes; ++c) {
    if (!present[static_cast<std::size_t>(c)]) continue;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto r = rows[k];
      fg[k] = targets[static_cast<std::size_t>(r)] == c;
      errors[k] = fg[k] ? 1.0 - probabilities(r, c) : probabilities(r, c);
    }
    out.value += lovasz_class_loss(errors, fg, &grad);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      out.grad(rows[k], c) += (fg[k] ? -grad[k] : grad[k]) / num_present;
    }
  }
  out.value /= num_present;
  return out;
}

LossResult total_loss(const Matrix& logits, std::span<const Label> targets) {
  auto ce = cross_entropy(logits, targets);
  const Matrix p = softmax_rows(logits);
  const auto lv = lovasz_softmax(p, targets);
  LossResult out;
  out.value = ce.value + lv.value;
  // Chain rule through the softmax: dz = p * (dp - <dp, p>).
  out.grad = std::move(ce.grad);
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    if (targets[static_cast<std::size_t>(i)] == kIgnoreLabel) continue;
    const double dot = lv.grad.row(i).dot(p.row(i));
    out.grad.row(i).array() += p.row(i).array() * (lv.grad.row(i).array() - dot);
  }
  return out;
}

}  // namespace shellseg
