#include "memefuse/checkpoint.hpp"

#include "byte_io.hpp"
#include "memefuse/channel_file.hpp"
#include "memefuse/error.hpp"

#include <cstring>

namespace memefuse {

namespace {

constexpr std::uint32_t mode_code(FusionMode mode) { return static_cast<std::uint32_t>(mode); }

struct Tensor {
    std::vector<std::uint64_t> shape;
    std::vector<double> values;  // row-major
};

Tensor from_matrix(const Eigen::MatrixXd& m) {
    Tensor t;
    t.shape = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
    t.values.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) t.values.push_back(m(r, c));
    return t;
}

Tensor from_vector(const Eigen::VectorXd& v) {
    return {{static_cast<std::uint64_t>(v.size())}, std::vector<double>(v.data(), v.data() + v.size())};
}

Tensor from_bilinear(const BilinearParams<double>& p) {
    Tensor t;
    t.shape = {static_cast<std::uint64_t>(p.out_dim()), static_cast<std::uint64_t>(p.d_m),
               static_cast<std::uint64_t>(p.d_h)};
    t.values.reserve(static_cast<std::size_t>(p.weight.size()));
    for (Eigen::Index i = 0; i < p.out_dim(); ++i)
        for (Eigen::Index j = 0; j < p.d_m; ++j)
            for (Eigen::Index k = 0; k < p.d_h; ++k) t.values.push_back(p(i, j, k));
    return t;
}

class Reader {
public:
    explicit Reader(std::span<const std::byte> bytes) : bytes_(bytes) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        T v = detail::get_le<T>(bytes_, offset_);
        offset_ += sizeof(T);
        return v;
    }

    void need(std::size_t n) const {
        if (bytes_.size() - offset_ < n) {
            throw LengthError("checkpoint truncated at byte " + std::to_string(offset_));
        }
    }

    bool done() const { return offset_ == bytes_.size(); }

private:
    std::span<const std::byte> bytes_;
    std::size_t offset_ = 0;
};

Tensor read_tensor(Reader& in, std::size_t index) {
    Tensor t;
    const auto rank = in.get<std::uint32_t>();
    if (rank < 1 || rank > 3) {
        throw FormatError("checkpoint tensor " + std::to_string(index) + " has unsupported rank " +
                          std::to_string(rank));
    }
    std::uint64_t total = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
        const auto d = in.get<std::uint64_t>();
        if (d == 0 || d > (1ull << 32)) {
            throw FormatError("checkpoint tensor " + std::to_string(index) + " has invalid dimension");
        }
        t.shape.push_back(d);
        total *= d;
        if (total > (1ull << 40)) throw FormatError("checkpoint tensor too large");
    }
    in.need(total * sizeof(double));
    t.values.resize(total);
    for (auto& v : t.values) v = in.get<double>();
    return t;
}

Eigen::MatrixXd to_matrix(const Tensor& t, const char* what) {
    if (t.shape.size() != 2) throw ShapeError(std::string("checkpoint: ") + what + " must be rank 2");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(t.shape[0]), static_cast<Eigen::Index>(t.shape[1]));
    std::size_t at = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = t.values[at++];
    return m;
}

Eigen::VectorXd to_vector(const Tensor& t, const char* what) {
    if (t.shape.size() != 1) throw ShapeError(std::string("checkpoint: ") + what + " must be rank 1");
    return Eigen::Map<const Eigen::VectorXd>(t.values.data(), static_cast<Eigen::Index>(t.values.size()));
}

} // namespace

std::vector<std::byte> encode_checkpoint(const Model& model) {
    validate(model);
    std::vector<Tensor> tensors;
    if (model.bilinear) {
        tensors.push_back(from_bilinear(*model.bilinear));
        tensors.push_back(from_vector(model.bilinear->bias));
    }
    for (const auto& layer : model.mlp.layers) {
        tensors.push_back(from_matrix(layer.weight));
        tensors.push_back(from_vector(layer.bias));
    }

    std::vector<std::byte> out;
    for (char c : kCheckpointMagic) out.push_back(static_cast<std::byte>(c));
    detail::put_le<std::uint32_t>(out, kCheckpointVersion);
    const FusionConfig& f = model.fusion;
    detail::put_le<std::uint32_t>(out, mode_code(f.mode));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.d_m));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.d_h));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.bilinear_dim));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.k));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
        for (auto d : t.shape) detail::put_le<std::uint64_t>(out, d);
        for (double v : t.values) detail::put_le<double>(out, v);
    }
    return out;
}

Model decode_checkpoint(std::span<const std::byte> bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
        throw FormatError("bad checkpoint magic (expected \"MFM1\")");
    }
    Reader in(bytes.subspan(4));
    const auto version = in.get<std::uint32_t>();
    if (version != kCheckpointVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    }
    const auto mode = in.get<std::uint32_t>();
    if (mode > mode_code(FusionMode::combined)) {
        throw FormatError("unknown fusion mode code " + std::to_string(mode));
    }
    Model model;
    model.fusion.mode = static_cast<FusionMode>(mode);
    model.fusion.d_m = in.get<std::uint32_t>();
    model.fusion.d_h = in.get<std::uint32_t>();
    model.fusion.bilinear_dim = in.get<std::uint32_t>();
    model.fusion.k = in.get<std::uint32_t>();
    const auto count = in.get<std::uint32_t>();

    std::vector<Tensor> tensors;
    for (std::uint32_t i = 0; i < count; ++i) tensors.push_back(read_tensor(in, i));
    if (!in.done()) throw LengthError("trailing bytes after checkpoint tensors");

    std::size_t next = 0;
    if (uses_bilinear(model.fusion.mode)) {
        if (tensors.size() < 2 || tensors[0].shape.size() != 3) {
            throw ShapeError("checkpoint: bilinear tensor missing");
        }
        const Tensor& m = tensors[0];
        auto p = BilinearParams<double>::zeros(static_cast<Eigen::Index>(m.shape[0]),
                                               static_cast<Eigen::Index>(m.shape[1]),
                                               static_cast<Eigen::Index>(m.shape[2]));
        std::size_t at = 0;
        for (Eigen::Index i = 0; i < p.out_dim(); ++i)
            for (Eigen::Index j = 0; j < p.d_m; ++j)
                for (Eigen::Index k = 0; k < p.d_h; ++k) p(i, j, k) = m.values[at++];
        p.bias = to_vector(tensors[1], "bilinear bias");
        model.bilinear = std::move(p);
        next = 2;
    }
    if ((tensors.size() - next) % 2 != 0 || tensors.size() == next) {
        throw ShapeError("checkpoint: MLP tensors must come in (weight, bias) pairs");
    }
    for (; next < tensors.size(); next += 2) {
        model.mlp.layers.push_back({to_matrix(tensors[next], "layer weight"), to_vector(tensors[next + 1], "layer bias")});
    }
    validate(model);
    return model;
}

void save_checkpoint(const std::filesystem::path& path, const Model& model) {
    write_file_bytes(path, encode_checkpoint(model));
}

Model load_checkpoint(const std::filesystem::path& path) {
    return decode_checkpoint(read_file_bytes(path));
}

} // namespace memefuse
