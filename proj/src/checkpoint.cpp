#include "bislab/checkpoint.hpp"

#include "bislab/error.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace bislab {

namespace {

constexpr std::array<char, 8> kMagic = {'B', 'I', 'S', 'L', 'A', 'B', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void put_u64(std::ostream& out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i)
        buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 8);
}

void put_u32(std::ostream& out, std::uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i)
        buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 4);
}

std::uint64_t get_bytes(std::istream& in, int n) {
    unsigned char buf[8];
    if (!in.read(reinterpret_cast<char*>(buf), n))
        throw InvalidInput("checkpoint truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i)
        v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

std::uint32_t get_u32(std::istream& in) { return static_cast<std::uint32_t>(get_bytes(in, 4)); }

template <typename M>
void put_array(std::ostream& out, std::string_view name, const M& m) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            put_u64(out, std::bit_cast<std::uint64_t>(static_cast<double>(m(r, c))));
}

Matrix get_array(std::istream& in, std::string_view expected) {
    const auto len = get_u32(in);
    if (len > 64)
        throw InvalidInput("checkpoint: bad array name length");
    std::string name(len, '\0');
    if (!in.read(name.data(), len))
        throw InvalidInput("checkpoint truncated");
    if (name != expected)
        throw InvalidInput("checkpoint: expected array '" + std::string(expected) + "', found '" +
                           name + "'");
    const auto rows = get_u32(in);
    const auto cols = get_u32(in);
    if (static_cast<std::uint64_t>(rows) * cols > (1ULL << 28))
        throw InvalidInput("checkpoint: array too large");
    Matrix m(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r)
        for (std::uint32_t c = 0; c < cols; ++c)
            m(r, c) = std::bit_cast<double>(get_bytes(in, 8));
    return m;
}

} // namespace

void save_checkpoint(std::ostream& out, const MicroModel& model) {
    out.write(kMagic.data(), kMagic.size());
    put_u32(out, kVersion);
    put_u32(out, model.features_frozen() ? 1 : 0);
    put_u32(out, 4);
    put_array(out, "w1", model.w1);
    put_array(out, "b1", model.b1);
    put_array(out, "w2", model.w2);
    put_array(out, "b2", model.b2);
}

MicroModel load_checkpoint(std::istream& in) {
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic)
        throw InvalidInput("not a bislab checkpoint");
    if (get_u32(in) != kVersion)
        throw InvalidInput("unsupported checkpoint version");
    const bool frozen = get_u32(in) != 0;
    if (get_u32(in) != 4)
        throw InvalidInput("checkpoint: expected 4 arrays");

    const Matrix w1 = get_array(in, "w1");
    const Matrix b1 = get_array(in, "b1");
    const Matrix w2 = get_array(in, "w2");
    const Matrix b2 = get_array(in, "b2");
    if (b1.cols() != 1 || b2.cols() != 1 || b1.rows() != w1.rows() || w2.cols() != w1.rows() ||
        b2.rows() != w2.rows())
        throw InvalidInput("checkpoint: inconsistent parameter shapes");

    MicroModel model(static_cast<int>(w1.cols()), static_cast<int>(w1.rows()),
                     static_cast<int>(w2.rows()));
    model.w1 = w1;
    model.b1 = b1.col(0);
    model.w2 = w2;
    model.b2 = b2.col(0);
    if (frozen)
        model.freeze_features();
    return model;
}

void save_checkpoint_file(const std::string& path, const MicroModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write '" + path + "'");
    save_checkpoint(out, model);
}

MicroModel load_checkpoint_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open '" + path + "'");
    return load_checkpoint(in);
}

} // namespace bislab
