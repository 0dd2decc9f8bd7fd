#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace llb {

// Dense row-major 2-D sample array. Instantiated with uint16_t for stored
// video samples and double for metric math.
template <typename T>
class Plane {
public:
    Plane() = default;
    Plane(int width, int height, T fill = T{})
        : width_(width),
          height_(height),
          data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    const T& at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

    T* row(int y) { return data_.data() + static_cast<std::size_t>(y) * width_; }
    const T* row(int y) const { return data_.data() + static_cast<std::size_t>(y) * width_; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    std::vector<T>& samples() { return data_; }
    const std::vector<T>& samples() const { return data_; }

    bool same_size(const Plane& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

    bool operator==(const Plane& other) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using PlaneU16 = Plane<std::uint16_t>;
using PlaneF64 = Plane<double>;

}  // namespace llb
