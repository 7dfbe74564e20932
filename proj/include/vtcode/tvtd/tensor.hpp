#pragma once

#include <Eigen/Core>
#include <string>
#include <unordered_map>
#include <vector>

#include "../bitword.hpp"

namespace vtcode::tvtd {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using Vec = Eigen::Matrix<T, 1, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MatMap = Eigen::Map<Mat<T>>;
template <class T>
using ConstMatMap = Eigen::Map<const Mat<T>>;

/// Flat parameter storage. The base address is aligned to Eigen's widest packet so the
/// vectorized kernels take the same path on every run.
template <class T>
using Buffer = std::vector<T, Eigen::aligned_allocator<T>>;

/// Location of one named parameter matrix inside a flat buffer.
struct Slot {
    std::size_t offset = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    [[nodiscard]] std::size_t size() const noexcept { return rows * cols; }
};

struct BlobInfo {
    std::string name;
    Slot slot;
};

/// Ordered registry of named parameter matrices, all stored back to back. Values,
/// gradients and optimizer moments share the layout, so each is a plain vector.
class ParameterLayout {
public:
    Slot add(const std::string& name, std::size_t rows, std::size_t cols) {
        if (index_.count(name)) throw ParamError("duplicate parameter " + name);
        Slot s{total_, rows, cols};
        index_[name] = blobs_.size();
        blobs_.push_back({name, s});
        total_ += rows * cols;
        return s;
    }
    [[nodiscard]] const Slot& operator[](const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw ParamError("unknown parameter " + name);
        return blobs_[it->second].slot;
    }
    [[nodiscard]] bool contains(const std::string& name) const { return index_.count(name) != 0; }
    [[nodiscard]] std::size_t total() const noexcept { return total_; }
    [[nodiscard]] const std::vector<BlobInfo>& blobs() const noexcept { return blobs_; }

private:
    std::vector<BlobInfo> blobs_;
    std::unordered_map<std::string, std::size_t> index_;
    std::size_t total_ = 0;
};

template <class T>
MatMap<T> view(Buffer<T>& buf, const Slot& s) {
    return MatMap<T>(buf.data() + s.offset, static_cast<Eigen::Index>(s.rows), static_cast<Eigen::Index>(s.cols));
}
template <class T>
ConstMatMap<T> view(const Buffer<T>& buf, const Slot& s) {
    return ConstMatMap<T>(buf.data() + s.offset, static_cast<Eigen::Index>(s.rows), static_cast<Eigen::Index>(s.cols));
}
template <class T>
auto row(Buffer<T>& buf, const Slot& s, std::size_t r) {
    return view(buf, s).row(static_cast<Eigen::Index>(r));
}
template <class T>
auto row(const Buffer<T>& buf, const Slot& s, std::size_t r) {
    return view(buf, s).row(static_cast<Eigen::Index>(r));
}

}  // namespace vtcode::tvtd
