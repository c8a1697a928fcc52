// SPDX-License-Identifier: Apache-2.0

#include "diva/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace diva {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

template <class T>
void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    template <class T>
    T get(const char* what) {
        if (pos_ + sizeof(T) > bytes_.size())
            throw FormatError(std::string("checkpoint truncated while reading ") + what);
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    std::string take(std::size_t n, const char* what) {
        if (pos_ + n > bytes_.size())
            throw FormatError(std::string("checkpoint truncated while reading ") + what);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    bool done() const { return pos_ == bytes_.size(); }

private:
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const ParameterSet& params) {
    std::string out = "DIVA";
    put<std::uint8_t>(out, kCheckpointVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
    for (const auto& p : params.items()) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
        out += p.name;
        put<std::uint32_t>(out, static_cast<std::uint32_t>(p.tensor.rank()));
        for (std::size_t d : p.tensor.shape()) put<std::uint64_t>(out, d);
        for (double v : p.tensor.data()) put<double>(out, v);
    }
    return out;
}

ParameterSet decode_checkpoint(const std::string& bytes) {
    Reader r(bytes);
    if (r.take(4, "magic") != "DIVA") throw FormatError("not a DIVA checkpoint (bad magic)");
    const auto version = r.get<std::uint8_t>("version");
    if (version != kCheckpointVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    const auto count = r.get<std::uint32_t>("record count");
    ParameterSet out;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = r.get<std::uint32_t>("name length");
        std::string name = r.take(name_len, "name");
        const auto rank = r.get<std::uint32_t>("rank");
        if (rank < 1 || rank > 2)
            throw FormatError("record " + name + " has unsupported rank " + std::to_string(rank));
        Shape shape;
        std::size_t n = 1;
        for (std::uint32_t k = 0; k < rank; ++k) {
            shape.push_back(r.get<std::uint64_t>("dimension"));
            n *= shape.back();
        }
        std::vector<double> data(n);
        for (auto& v : data) v = r.get<double>("payload");
        out.add(std::move(name), Tensor::from(std::move(shape), std::move(data)));
    }
    if (!r.done()) throw FormatError("trailing bytes after last checkpoint record");
    return out;
}

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open " + path.string() + " for writing");
    const auto bytes = encode_checkpoint(params);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw FormatError("write failed for " + path.string());
}

ParameterSet load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return decode_checkpoint(ss.str());
}

}  // namespace diva
