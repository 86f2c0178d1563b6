#include "opnorm/params.hpp"

#include <string>

#include "opnorm/error.hpp"

namespace opnorm {

std::size_t BlockSet::width() const {
    if (weights.empty()) throw ShapeError("BlockSet: no layers");
    return weights.front().rows();
}

std::size_t BlockSet::input_dim() const {
    if (weights.empty()) throw ShapeError("BlockSet: no layers");
    return weights.front().cols();
}

void BlockSet::validate() const {
    const std::size_t k = weights.size();
    if (k < 2) throw ShapeError("BlockSet: depth must be >= 2, got " + std::to_string(k));
    if (biases.size() != k) {
        throw ShapeError("BlockSet: " + std::to_string(k) + " weights but " +
                         std::to_string(biases.size()) + " biases");
    }
    const std::size_t w = width();
    const std::size_t d = input_dim();
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t rows = i + 1 == k ? 1 : w;
        const std::size_t cols = i == 0 ? d : w;
        if (weights[i].rows() != rows || weights[i].cols() != cols) {
            throw ShapeError("BlockSet: W_" + std::to_string(i + 1) + " has shape " +
                             weights[i].shape_string() + ", expected (" + std::to_string(rows) +
                             "x" + std::to_string(cols) + ")");
        }
        if (biases[i].size() != rows) {
            throw ShapeError("BlockSet: b_" + std::to_string(i + 1) + " has length " +
                             std::to_string(biases[i].size()) + ", expected " +
                             std::to_string(rows));
        }
    }
}

bool BlockSet::same_shape(const BlockSet& other) const {
    if (weights.size() != other.weights.size() || biases.size() != other.biases.size()) {
        return false;
    }
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i].rows() != other.weights[i].rows() ||
            weights[i].cols() != other.weights[i].cols()) {
            return false;
        }
    }
    for (std::size_t i = 0; i < biases.size(); ++i) {
        if (biases[i].size() != other.biases[i].size()) return false;
    }
    return true;
}

namespace {

void require_same(const BlockSet& a, const BlockSet& b, const char* what) {
    if (!a.same_shape(b)) throw ShapeError(std::string(what) + ": block layouts differ");
}

}  // namespace

BlockSet& BlockSet::operator+=(const BlockSet& other) {
    require_same(*this, other, "BlockSet::operator+=");
    for (std::size_t i = 0; i < weights.size(); ++i) weights[i] += other.weights[i];
    for (std::size_t i = 0; i < biases.size(); ++i)
        for (std::size_t j = 0; j < biases[i].size(); ++j) biases[i][j] += other.biases[i][j];
    return *this;
}

BlockSet& BlockSet::operator-=(const BlockSet& other) {
    require_same(*this, other, "BlockSet::operator-=");
    for (std::size_t i = 0; i < weights.size(); ++i) weights[i] -= other.weights[i];
    for (std::size_t i = 0; i < biases.size(); ++i)
        for (std::size_t j = 0; j < biases[i].size(); ++j) biases[i][j] -= other.biases[i][j];
    return *this;
}

BlockSet& BlockSet::operator*=(double s) {
    for (auto& w : weights) w *= s;
    for (auto& b : biases)
        for (double& x : b) x *= s;
    return *this;
}

BlockSet zero_blocks(std::size_t depth, std::size_t width, std::size_t input_dim) {
    if (depth < 2) throw ShapeError("zero_blocks: depth must be >= 2");
    BlockSet out;
    for (std::size_t i = 0; i < depth; ++i) {
        const std::size_t rows = i + 1 == depth ? 1 : width;
        const std::size_t cols = i == 0 ? input_dim : width;
        out.weights.emplace_back(rows, cols);
        out.biases.emplace_back(rows);
    }
    return out;
}

BlockSet zeros_like(const BlockSet& like) {
    BlockSet out;
    for (const auto& w : like.weights) out.weights.emplace_back(w.rows(), w.cols());
    for (const auto& b : like.biases) out.biases.emplace_back(b.size());
    return out;
}

BlockSet operator+(BlockSet a, const BlockSet& b) { return a += b; }
BlockSet operator-(BlockSet a, const BlockSet& b) { return a -= b; }
BlockSet operator*(double s, BlockSet a) { return a *= s; }

double inner(const BlockSet& a, const BlockSet& b) {
    require_same(a, b, "inner");
    double s = 0.0;
    for (std::size_t i = 0; i < a.weights.size(); ++i) s += inner(a.weights[i], b.weights[i]);
    for (std::size_t i = 0; i < a.biases.size(); ++i) s += dot(a.biases[i].span(), b.biases[i].span());
    return s;
}

bool all_finite(const BlockSet& a) {
    for (const auto& w : a.weights)
        if (!all_finite(w.span())) return false;
    for (const auto& b : a.biases)
        if (!all_finite(b.span())) return false;
    return true;
}

}  // namespace opnorm
