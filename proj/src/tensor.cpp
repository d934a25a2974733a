#include "ttvrs/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace ttvrs {

std::string shape_str(const Shape& s)
{
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

Tensor Tensor::reshaped(Shape s) const
{
    if (shape_numel(s) != size())
        throw ShapeError("cannot reshape " + shape_str(shape_) + " to " + shape_str(s));
    return Tensor(std::move(s), data_);
}

void Tensor::fill(double v)
{
    std::fill(data_.begin(), data_.end(), v);
}

bool Tensor::all_finite() const
{
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

} // namespace ttvrs
