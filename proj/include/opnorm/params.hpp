#pragma once

// Block-structured parameter set of a K-layer scalar-output MLP.
//
//   W_1 : w x d      b_1 .. b_{K-1} : length w
//   W_i : w x w      b_K            : length 1
//   W_K : 1 x w
//
// Perturbations and gradients share the exact same layout, so one type serves
// all three.

#include <cstddef>
#include <vector>

#include "opnorm/linalg.hpp"

namespace opnorm {

struct BlockSet {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;

    std::size_t depth() const noexcept { return weights.size(); }
    std::size_t width() const;
    std::size_t input_dim() const;

    /// Throws ShapeError unless the layout above holds with K >= 2.
    void validate() const;
    bool same_shape(const BlockSet& other) const;

    BlockSet& operator+=(const BlockSet& other);
    BlockSet& operator-=(const BlockSet& other);
    BlockSet& operator*=(double s);

    friend bool operator==(const BlockSet&, const BlockSet&) = default;
};

using ModelParams = BlockSet;
using Perturbation = BlockSet;

/// All-zero block set with K layers of the given width and input dimension.
BlockSet zero_blocks(std::size_t depth, std::size_t width, std::size_t input_dim);
BlockSet zeros_like(const BlockSet& like);

BlockSet operator+(BlockSet a, const BlockSet& b);
BlockSet operator-(BlockSet a, const BlockSet& b);
BlockSet operator*(double s, BlockSet a);

/// Σ over every block of the entrywise product.
double inner(const BlockSet& a, const BlockSet& b);
bool all_finite(const BlockSet& a);

}  // namespace opnorm
