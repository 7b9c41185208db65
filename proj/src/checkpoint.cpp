#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "hype/errors.hpp"
#include "hype/model.hpp"

namespace hype {

namespace {

constexpr char kMagic[8] = {'H', 'Y', 'P', 'E', 'C', 'K', 'P', 'T'};

class Writer {
   public:
    void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void raw(const char* p, std::size_t n) { out_.append(p, n); }
    std::string take() { return std::move(out_); }

   private:
    std::string out_;
};

class Reader {
   public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(bytes_[pos_++]);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes_[pos_++])) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(bytes_[pos_++])) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    void expect_magic() {
        need(sizeof(kMagic));
        if (std::memcmp(bytes_.data() + pos_, kMagic, sizeof(kMagic)) != 0) throw FormatError("checkpoint: bad magic");
        pos_ += sizeof(kMagic);
    }
    bool at_end() const { return pos_ == bytes_.size(); }

   private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw FormatError("checkpoint: truncated file");
    }
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const ModelState& state) {
    Writer w;
    w.raw(kMagic, sizeof(kMagic));
    w.u32(kCheckpointVersion);
    const auto& c = state.config;
    w.u64(c.n_layers);
    w.u64(c.d_model);
    w.u64(c.n_heads);
    w.u64(c.d_ff);
    w.u64(c.vocab_size);
    w.u64(c.max_seq_len);
    w.u64(c.n_classes);
    w.u8(c.regression ? 1 : 0);
    w.f64(c.ln_eps);
    const auto params = state.parameters();
    w.u64(params.size());
    for (const auto& p : params) {
        const auto& shape = p.tensor.shape();
        w.u32(static_cast<std::uint32_t>(shape.size()));
        for (auto d : shape) w.u64(d);
        for (double v : p.tensor.data()) w.f64(v);
    }
    return w.take();
}

ModelState deserialize_checkpoint(const std::string& bytes) {
    Reader r(bytes);
    r.expect_magic();
    const std::uint32_t version = r.u32();
    if (version > kCheckpointVersion) {
        throw VersionError("checkpoint format version " + std::to_string(version) + " is newer than supported " +
                           std::to_string(kCheckpointVersion));
    }
    if (version == 0) throw VersionError("checkpoint format version 0 is invalid");
    ModelConfig c;
    c.n_layers = r.u64();
    c.d_model = r.u64();
    c.n_heads = r.u64();
    c.d_ff = r.u64();
    c.vocab_size = r.u64();
    c.max_seq_len = r.u64();
    c.n_classes = r.u64();
    const std::uint8_t reg = r.u8();
    if (reg > 1) throw FormatError("checkpoint: bad regression flag");
    c.regression = reg == 1;
    c.ln_eps = r.f64();
    try {
        c.validate();
    } catch (const UsageError& e) {
        throw FormatError(std::string("checkpoint: invalid config record: ") + e.what());
    }

    // Build the layout from the config, then fill it; any shape disagreement is corruption.
    ModelState state = init_params(c, 0);
    const auto params = state.parameters();
    const std::uint64_t count = r.u64();
    if (count != params.size()) {
        throw FormatError("checkpoint: expected " + std::to_string(params.size()) + " parameter arrays, found " +
                          std::to_string(count));
    }
    for (const auto& p : params) {
        const std::uint32_t rank = r.u32();
        Shape shape(rank);
        for (auto& d : shape) d = r.u64();
        if (shape != p.tensor.shape()) {
            throw FormatError("checkpoint: parameter " + p.name + " has shape " + shape_str(shape) + ", expected " +
                              shape_str(p.tensor.shape()));
        }
        Tensor t = p.tensor;
        for (auto& v : t.mutable_data()) v = r.f64();
    }
    if (!r.at_end()) throw FormatError("checkpoint: trailing bytes after parameter data");
    return state;
}

void save_checkpoint(const ModelState& state, const std::filesystem::path& path) {
    const std::string bytes = serialize_checkpoint(state);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing checkpoint: " + path.string());
}

ModelState load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize_checkpoint(buf.str());
}

}  // namespace hype
