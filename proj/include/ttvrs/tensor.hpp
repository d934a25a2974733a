#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ttvrs {

/// Thrown when operand shapes disagree.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);

inline std::size_t shape_numel(const Shape& s)
{
    return std::accumulate(s.begin(), s.end(), std::size_t{1},
                           [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
}

/// Dense row-major array of doubles. Feature maps are stored channel-first,
/// so a C x H x W tensor is also a C x (H*W) matrix over the same buffer.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0)
        : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}
    Tensor(Shape shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data))
    {
        if (data_.size() != shape_numel(shape_))
            throw ShapeError("tensor data size " + std::to_string(data_.size()) +
                             " does not match shape " + shape_str(shape_));
    }

    static Tensor vector(std::initializer_list<double> v)
    {
        return Tensor({static_cast<int>(v.size())}, std::vector<double>(v));
    }
    static Tensor scalar(double v) { return Tensor({1}, std::vector<double>{v}); }

    const Shape& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<double> span() { return data_; }
    std::span<const double> span() const { return data_; }
    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(int i, int j) { return data_[static_cast<std::size_t>(i) * static_cast<std::size_t>(shape_[1]) + j]; }
    double at(int i, int j) const { return data_[static_cast<std::size_t>(i) * static_cast<std::size_t>(shape_[1]) + j]; }
    double& at(int c, int y, int x)
    {
        return data_[(static_cast<std::size_t>(c) * shape_[1] + y) * shape_[2] + x];
    }
    double at(int c, int y, int x) const
    {
        return data_[(static_cast<std::size_t>(c) * shape_[1] + y) * shape_[2] + x];
    }

    /// Same buffer, new shape; element count must match.
    Tensor reshaped(Shape s) const;

    /// Rows x cols view of a rank >= 2 tensor: first dim x product of the rest.
    int rows() const { return shape_.empty() ? 0 : shape_[0]; }
    int cols() const { return shape_.empty() ? 0 : static_cast<int>(size() / static_cast<std::size_t>(shape_[0])); }

    void fill(double v);
    bool all_finite() const;

private:
    Shape shape_;
    std::vector<double> data_;
};

} // namespace ttvrs
