#pragma once

#include <cstddef>
#include <span>

#include "ranl/tape.hpp"

// Differentiable operations over tape values. Every op checks operand shapes
// and throws DimensionError (or IndexError for ids) naming the operands.
namespace ranl::ops {

// W[m x n] x[n] + b[m]
Var affine(Var W, Var x, Var b);
// M[m x n] x[n]
Var matvec(Var M, Var x);
// alpha[N]^T G[N x d] -> [d], i.e. sum_i alpha_i * G_i
Var vecmat(Var alpha, Var G);

Var tanh_map(Var x);
Var sigmoid(Var x);
// Max-subtracted softmax over a rank-1 tensor.
Var softmax_vec(Var s);

Var hadamard(Var a, Var b);
Var add(Var a, Var b);
// x[N] + s[1] broadcast to every entry.
Var add_scalar(Var x, Var s);
Var scale(Var x, double factor);

// Column-wise mean of M[k x d] -> [d].
Var mean_rows(Var M);
Var concat(Var a, Var b);
// Stacks k rank-1 tensors of equal length into a [k x d] matrix.
Var stack_rows(std::span<const Var> rows);
// Row r of M[k x d] as a rank-1 tensor.
Var row(Var M, std::size_t r);
// x[offset, offset + length) of a rank-1 tensor.
Var slice(Var x, std::size_t offset, std::size_t length);
// Views any tensor as rank-1.
Var flatten(Var x);

Var embed_lookup(Var table, std::size_t index);

Var sum(Var x);
Var sum_squares(Var x);
// -log softmax(logits)[target] as a single-element tensor.
Var cross_entropy(Var logits, std::size_t target);

}  // namespace ranl::ops
