#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sliceplan/errors.hpp"
#include "sliceplan/pipeline.hpp"

namespace sliceplan {

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Activation { Identity, SiLU, GeLU };
std::string_view to_string(Activation a) noexcept;

/// Who executes a block. CGPrime is the CC weight run on the GPU for the
/// diverted tokens.
enum class Executor { CC, CG, GG, CGPrime };
std::string_view to_string(Executor e) noexcept;

/// W1 (M x H) split by columns and W2 (H x N) split by rows at the same
/// boundaries: [0, b1) is CC, [b1, b2) is CG, [b2, H) is GG.
template <typename Scalar>
struct SlicedWeights {
  std::array<DenseMatrix<Scalar>, 3> w1;
  std::array<DenseMatrix<Scalar>, 3> w2;
  std::array<Eigen::Index, 3> widths{};
  SlicingRates rates;
};

/// Partition boundaries floor(r_CC*H) and floor((r_CC+r_CG)*H); GG keeps the
/// remainder.
inline std::array<Eigen::Index, 3> slice_widths(const SlicingRates& r, Eigen::Index hidden) {
  // The small nudge keeps 0.5+0.5 = 0.99999... from losing a column to GG.
  constexpr double kNudge = 1e-9;
  const double h = static_cast<double>(hidden);
  auto b1 = static_cast<Eigen::Index>(std::floor(r.cc() * h + kNudge));
  auto b2 = static_cast<Eigen::Index>(std::floor((r.cc() + r.cg()) * h + kNudge));
  b1 = std::min(b1, hidden);
  b2 = std::clamp(b2, b1, hidden);
  return {b1, b2 - b1, hidden - b2};
}

template <typename Scalar>
SlicedWeights<Scalar> slice_weights(const DenseMatrix<Scalar>& w1, const DenseMatrix<Scalar>& w2,
                                    const SlicingRates& rates) {
  if (w1.cols() != w2.rows()) {
    throw Error(Errc::ShapeMismatch, "W1 is " + std::to_string(w1.rows()) + "x" +
                                         std::to_string(w1.cols()) + " but W2 has " +
                                         std::to_string(w2.rows()) + " rows");
  }
  SlicedWeights<Scalar> sw;
  sw.rates = rates;
  sw.widths = slice_widths(rates, w1.cols());
  Eigen::Index offset = 0;
  for (std::size_t b = 0; b < 3; ++b) {
    sw.w1[b] = w1.middleCols(offset, sw.widths[b]);
    sw.w2[b] = w2.middleRows(offset, sw.widths[b]);
    offset += sw.widths[b];
  }
  return sw;
}

template <typename Derived>
auto apply_activation(const Eigen::MatrixBase<Derived>& z, Activation a) {
  using Scalar = typename Derived::Scalar;
  DenseMatrix<Scalar> out = z;
  switch (a) {
    case Activation::Identity:
      break;
    case Activation::SiLU:
      out = z.array() / (Scalar(1) + (-z.array()).exp());
      break;
    case Activation::GeLU:
      out = z.array().unaryExpr([](Scalar x) {
        return Scalar(0.5) * x * (Scalar(1) + std::erf(x / std::sqrt(Scalar(2))));
      });
      break;
  }
  return out;
}

/// One partial product Y_block = A(X_rows * W1_block) * W2_block.
struct BlockTask {
  Executor executor = Executor::CC;
  std::size_t block = 0;  // 0 = CC weights, 1 = CG, 2 = GG
  Eigen::Index row_begin = 0;
  Eigen::Index row_count = 0;
};

template <typename Scalar>
struct SlicedForward {
  DenseMatrix<Scalar> output;
  std::vector<BlockTask> tasks;
};

/// Block tasks of the sliced MLP: the first T - n_g rows use CC/CG/GG, the
/// last n_g rows use CG'/CG/GG. Empty blocks are skipped.
inline std::vector<BlockTask> block_tasks(Eigen::Index tokens, Eigen::Index n_g,
                                          const std::array<Eigen::Index, 3>& widths) {
  std::vector<BlockTask> tasks;
  const Eigen::Index cpu_rows = tokens - n_g;
  const auto add = [&](Executor e, std::size_t block, Eigen::Index begin, Eigen::Index count) {
    if (count > 0 && widths[block] > 0) tasks.push_back({e, block, begin, count});
  };
  add(Executor::CC, 0, 0, cpu_rows);
  add(Executor::CG, 1, 0, cpu_rows);
  add(Executor::GG, 2, 0, cpu_rows);
  add(Executor::CGPrime, 0, cpu_rows, n_g);
  add(Executor::CG, 1, cpu_rows, n_g);
  add(Executor::GG, 2, cpu_rows, n_g);
  return tasks;
}

/// Sums the block partial products in `tasks` order.
template <typename Scalar>
DenseMatrix<Scalar> accumulate_blocks(const DenseMatrix<Scalar>& x, const SlicedWeights<Scalar>& sw,
                                      Activation activation, const std::vector<BlockTask>& tasks) {
  const Eigen::Index out_cols = sw.w2[0].cols();
  DenseMatrix<Scalar> y = DenseMatrix<Scalar>::Zero(x.rows(), out_cols);
  for (const BlockTask& t : tasks) {
    const DenseMatrix<Scalar> z =
        apply_activation(x.middleRows(t.row_begin, t.row_count) * sw.w1[t.block], activation);
    y.middleRows(t.row_begin, t.row_count).noalias() += z * sw.w2[t.block];
  }
  return y;
}

template <typename Scalar>
SlicedForward<Scalar> mlp_forward_sliced(const DenseMatrix<Scalar>& x,
                                         const SlicedWeights<Scalar>& sw, Activation activation,
                                         Eigen::Index n_g) {
  if (x.cols() != sw.w1[0].rows()) {
    throw Error(Errc::ShapeMismatch, "X has " + std::to_string(x.cols()) + " columns, W1 has " +
                                         std::to_string(sw.w1[0].rows()) + " rows");
  }
  if (n_g < 0 || n_g > x.rows()) {
    throw Error(Errc::TokenCountOutOfRange,
                "n_g = " + std::to_string(n_g) + " outside [0, " + std::to_string(x.rows()) + "]");
  }
  SlicedForward<Scalar> out;
  out.tasks = block_tasks(x.rows(), n_g, sw.widths);
  out.output = accumulate_blocks(x, sw, activation, out.tasks);
  return out;
}

template <typename Scalar>
DenseMatrix<Scalar> mlp_forward_reference(const DenseMatrix<Scalar>& x, const DenseMatrix<Scalar>& w1,
                                          const DenseMatrix<Scalar>& w2, Activation activation) {
  if (x.cols() != w1.rows() || w1.cols() != w2.rows()) {
    throw Error(Errc::ShapeMismatch, "X*W1*W2 shapes do not chain");
  }
  return apply_activation(x * w1, activation) * w2;
}

}  // namespace sliceplan
