#include <algorithm>
#include <bit>
#include <cstring>
#include <sstream>

#include "pepclass/fileutil.hpp"
#include "pepclass/models.hpp"

namespace pepclass::models {

namespace {

constexpr char kMagic[8] = {'P', 'E', 'P', 'M', 'O', 'D', 'E', 'L'};

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

template <typename T>
void put(std::string& out, T v) {
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    out.append(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get(std::string_view data, std::size_t& pos) {
    if (pos + sizeof(T) > data.size()) throw ModelError("model file is truncated");
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, data.data() + pos, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    pos += sizeof(T);
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

std::string header_text(const ModelParams& p) {
    std::ostringstream h;
    h << "architecture " << to_string(p.config.architecture) << '\n'
      << "head " << to_string(p.config.head) << '\n'
      << "embedding_trainable " << (p.config.embedding_trainable ? 1 : 0) << '\n'
      << "max_len " << p.config.max_len << '\n'
      << "token_k " << p.config.token_k << '\n'
      << "conv_kernel " << p.config.conv_kernel << '\n'
      << "lstm_relu " << to_string(p.config.lstm_relu) << '\n'
      << "seed " << p.config.seed << '\n'
      << "tensors " << p.tensors.size() << '\n';
    for (const auto& [name, t] : p.tensors) {
        h << "tensor " << name;
        for (auto d : t.shape()) h << ' ' << d;
        h << '\n';
    }
    return h.str();
}

}  // namespace

std::string serialize_params(const ModelParams& params) {
    std::string out(kMagic, sizeof kMagic);
    put<std::uint32_t>(out, params.format_version);
    const auto header = header_text(params);
    put<std::uint64_t>(out, header.size());
    out += header;
    for (const auto& [name, t] : params.tensors)
        for (double v : t.values()) put<double>(out, v);
    const auto emb = embed::embedding_to_text(params.embedding);
    put<std::uint64_t>(out, emb.size());
    out += emb;
    put<std::uint64_t>(out, fnv1a64(out));
    return out;
}

ModelParams deserialize_params(std::string_view data) {
    if (data.size() < sizeof kMagic || std::memcmp(data.data(), kMagic, sizeof kMagic) != 0)
        throw ModelError("not a model file (bad magic)");
    std::size_t pos = sizeof kMagic;
    ModelParams p;
    p.format_version = get<std::uint32_t>(data, pos);
    if (p.format_version != ModelParams::kFormatVersion)
        throw ModelError("model format version " + std::to_string(p.format_version) + " is not supported (this build reads version " +
                         std::to_string(ModelParams::kFormatVersion) + ")");
    if (data.size() < pos + 8) throw ModelError("model file is truncated");
    const std::uint64_t stored_sum = [&] {
        std::size_t tail = data.size() - 8;
        return get<std::uint64_t>(data, tail);
    }();

    const auto header_len = get<std::uint64_t>(data, pos);
    if (pos + header_len > data.size()) throw ModelError("model file is truncated");
    std::istringstream header{std::string(data.substr(pos, header_len))};
    pos += header_len;

    std::string key;
    std::size_t n_tensors = 0;
    std::vector<std::pair<std::string, nn::Shape>> manifest;
    while (header >> key) {
        if (key == "architecture") {
            std::string v;
            header >> v;
            p.config.architecture = architecture_from_string(v);
        } else if (key == "head") {
            std::string v;
            header >> v;
            p.config.head = head_from_string(v);
        } else if (key == "embedding_trainable") {
            int v = 1;
            header >> v;
            p.config.embedding_trainable = v != 0;
        } else if (key == "max_len") {
            header >> p.config.max_len;
        } else if (key == "token_k") {
            header >> p.config.token_k;
        } else if (key == "conv_kernel") {
            header >> p.config.conv_kernel;
        } else if (key == "lstm_relu") {
            std::string v;
            header >> v;
            p.config.lstm_relu = relu_placement_from_string(v);
        } else if (key == "seed") {
            header >> p.config.seed;
        } else if (key == "tensors") {
            header >> n_tensors;
        } else if (key == "tensor") {
            std::string line;
            std::getline(header, line);
            std::istringstream ls(line);
            std::string name;
            ls >> name;
            nn::Shape shape;
            std::size_t d;
            while (ls >> d) shape.push_back(d);
            manifest.emplace_back(name, shape);
        } else {
            throw ModelError("unknown model header key '" + key + "'");
        }
        if (!header && !header.eof()) throw ModelError("malformed model header near '" + key + "'");
    }
    if (manifest.size() != n_tensors) throw ModelError("model header lists a different number of tensors than declared");

    for (auto& [name, shape] : manifest) {
        nn::Tensor t(shape);
        for (auto& v : t.values()) v = get<double>(data, pos);
        p.tensors.emplace_back(name, std::move(t));
    }
    const auto emb_len = get<std::uint64_t>(data, pos);
    if (pos + emb_len + 8 != data.size()) throw ModelError("model file is truncated or has trailing bytes");
    if (fnv1a64(data.substr(0, pos + emb_len)) != stored_sum) throw ModelError("model file checksum mismatch (corrupt file)");
    try {
        p.embedding = embed::embedding_from_text(data.substr(pos, emb_len));
    } catch (const embed::EmbedError& e) {
        throw ModelError(std::string("embedding section: ") + e.what());
    }
    return p;
}

void save_params(const ModelParams& params, const std::filesystem::path& path) {
    write_file_atomic(path, serialize_params(params));
}

ModelParams load_params(const std::filesystem::path& path) {
    std::string data;
    try {
        data = read_file(path);
    } catch (const std::runtime_error& e) {
        throw ModelError(e.what());
    }
    return deserialize_params(data);
}

}  // namespace pepclass::models
