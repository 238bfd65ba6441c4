#include "wesnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <functional>

#include "wesnet/errors.hpp"
#include "wesnet/io.hpp"

namespace wesnet {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'W', 'S', 'N', 'C', 'K', 'P', 'T', '\0'};

struct TensorRef {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double>* data;
};

template <class T>
void put_le(std::string& out, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <class T>
T get_le(std::string_view bytes, std::size_t& pos) {
    if (bytes.size() - pos < sizeof(T)) throw CorruptionError("checkpoint truncated");
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
    pos += sizeof(T);
    return v;
}

void add_layer_tensors(std::vector<TensorRef>& out, const std::string& prefix, Matrix& w1, Vector& b1, Matrix& w2,
                       Vector& b2, Matrix& w3, Vector& b3, Vector& beta) {
    out.push_back({prefix + ".w1", {w1.rows, w1.cols}, &w1.data});
    out.push_back({prefix + ".b1", {b1.size()}, &b1});
    out.push_back({prefix + ".w2", {w2.rows, w2.cols}, &w2.data});
    out.push_back({prefix + ".b2", {b2.size()}, &b2});
    out.push_back({prefix + ".w3", {w3.rows, w3.cols}, &w3.data});
    out.push_back({prefix + ".b3", {b3.size()}, &b3});
    out.push_back({prefix + ".beta", {beta.size()}, &beta});
}

void add_gradient_tensors(std::vector<TensorRef>& out, const std::string& prefix, NetworkGradients& g) {
    for (std::size_t r = 0; r < g.layers.size(); ++r) {
        auto& l = g.layers[r];
        add_layer_tensors(out, prefix + ".layer" + std::to_string(r), l.w1, l.b1, l.w2, l.b2, l.w3, l.b3, l.beta);
    }
}

/// Every tensor of the checkpoint in storage order. Pointers alias `ckpt`.
/// Parameters are reached through a copy of the layers, written back by the caller.
std::vector<TensorRef> tensor_refs(std::vector<LayerParams>& layers, Profile& input_profile,
                                   std::optional<AdamState>& adam) {
    std::vector<TensorRef> out;
    for (std::size_t r = 0; r < layers.size(); ++r) {
        auto& l = layers[r];
        add_layer_tensors(out, "layer" + std::to_string(r), l.w1, l.b1, l.w2, l.b2, l.w3, l.b3, l.beta.values);
    }
    out.push_back({"input_profile", {input_profile.values.size()}, &input_profile.values});
    if (adam) {
        add_gradient_tensors(out, "adam.m", adam->first_moment);
        add_gradient_tensors(out, "adam.v", adam->second_moment);
    }
    return out;
}

json net_config_json(const NetConfig& c) {
    return {{"nt", c.nt},
            {"nr", c.nr},
            {"modulation", std::string(to_string(c.modulation))},
            {"layers", c.layers},
            {"profile_kind", std::string(to_string(c.profile_kind))},
            {"keep_fraction", c.keep_fraction},
            {"learnable_beta", c.learnable_beta},
            {"lambda", c.lambda},
            {"reg_start_layer", c.reg_start_layer},
            {"psi_t", c.psi_t},
            {"input_profile_mode", c.input_profile_mode}};
}

NetConfig net_config_from_json(const json& j) {
    NetConfig c;
    c.nt = j.at("nt").get<std::size_t>();
    c.nr = j.at("nr").get<std::size_t>();
    c.modulation = parse_modulation(j.at("modulation").get<std::string>());
    c.layers = j.at("layers").get<std::size_t>();
    c.profile_kind = parse_profile_kind(j.at("profile_kind").get<std::string>());
    c.keep_fraction = j.at("keep_fraction").get<double>();
    c.learnable_beta = j.at("learnable_beta").get<bool>();
    c.lambda = j.at("lambda").get<double>();
    c.reg_start_layer = j.at("reg_start_layer").get<std::size_t>();
    c.psi_t = j.at("psi_t").get<double>();
    c.input_profile_mode = j.at("input_profile_mode").get<bool>();
    return c;
}

}  // namespace

json checkpoint_header(const Checkpoint& ckpt) {
    Checkpoint copy = ckpt;
    std::vector<LayerParams> layers = copy.params.layers();
    Profile input_profile = copy.params.input_profile();
    const auto refs = tensor_refs(layers, input_profile, copy.adam);

    json tensors = json::array();
    for (const auto& t : refs) tensors.push_back({{"name", t.name}, {"shape", t.shape}});

    const NetConfig& nc = ckpt.params.config();
    json h;
    h["format_version"] = kCheckpointVersion;
    h["config_hash"] = config_hash(ckpt.experiment);
    h["experiment"] = to_json(ckpt.experiment);
    h["net_config"] = net_config_json(nc);
    h["keep_fraction"] = nc.keep_fraction;
    h["layer_profile_kind"] = std::string(to_string(ckpt.params.layer(0).beta.kind));
    h["input_profile_kind"] = std::string(to_string(ckpt.params.input_profile().kind));
    h["input_profile_keep_fraction"] = ckpt.params.input_profile().keep_fraction;
    if (ckpt.adam) {
        h["adam"] = {{"step", ckpt.adam->step},
                     {"lr", ckpt.adam->lr},
                     {"beta1", ckpt.adam->beta1},
                     {"beta2", ckpt.adam->beta2},
                     {"epsilon", ckpt.adam->epsilon}};
    } else {
        h["adam"] = nullptr;
    }
    h["tensors"] = std::move(tensors);
    return h;
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
    const std::string header = checkpoint_header(ckpt).dump();
    Checkpoint copy = ckpt;
    std::vector<LayerParams> layers = copy.params.layers();
    Profile input_profile = copy.params.input_profile();
    const auto refs = tensor_refs(layers, input_profile, copy.adam);

    std::string out(kMagic, sizeof kMagic);
    put_le<std::uint32_t>(out, kCheckpointVersion);
    put_le<std::uint64_t>(out, header.size());
    out += header;
    for (const auto& t : refs)
        for (double v : *t.data) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    put_le<std::uint64_t>(out, fnv1a64(out.data(), out.size()));
    return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
    if (bytes.size() < sizeof kMagic + 4 + 8 + 8) throw CorruptionError("checkpoint truncated");
    if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) throw CorruptionError("not a checkpoint (bad magic)");
    std::size_t tail = bytes.size() - 8;
    const auto stored = get_le<std::uint64_t>(bytes, tail);
    if (stored != fnv1a64(bytes.data(), bytes.size() - 8)) throw CorruptionError("checkpoint checksum mismatch");

    std::size_t pos = sizeof kMagic;
    const auto version = get_le<std::uint32_t>(bytes, pos);
    if (version != kCheckpointVersion)
        throw VersionError("checkpoint format version " + std::to_string(version) + " is not supported (expected " +
                           std::to_string(kCheckpointVersion) + ")");
    const auto header_len = get_le<std::uint64_t>(bytes, pos);
    if (header_len > bytes.size() - pos - 8) throw CorruptionError("checkpoint truncated (header)");

    json h;
    try {
        h = json::parse(bytes.substr(pos, header_len));
    } catch (const json::exception& e) {
        throw CorruptionError(std::string("checkpoint header unreadable: ") + e.what());
    }
    pos += header_len;

    try {
        Checkpoint out;
        out.experiment = experiment_from_json(h.at("experiment"));
        const NetConfig nc = net_config_from_json(h.at("net_config"));

        // Build correctly shaped containers, then fill them in header order.
        RngStream scratch(0, 0);
        NetworkParams shaped = xavier_init(scratch, nc);
        std::vector<LayerParams> layers = shaped.layers();
        Profile input_profile = shaped.input_profile();
        const ProfileKind layer_kind = parse_profile_kind(h.at("layer_profile_kind").get<std::string>());
        for (auto& l : layers) l.beta.kind = layer_kind;
        input_profile.kind = parse_profile_kind(h.at("input_profile_kind").get<std::string>());
        input_profile.keep_fraction = h.at("input_profile_keep_fraction").get<double>();

        if (!h.at("adam").is_null()) {
            const json& a = h.at("adam");
            AdamState s = AdamState::for_params(shaped, a.at("lr").get<double>());
            s.step = a.at("step").get<std::uint64_t>();
            s.beta1 = a.at("beta1").get<double>();
            s.beta2 = a.at("beta2").get<double>();
            s.epsilon = a.at("epsilon").get<double>();
            out.adam = std::move(s);
        }
        const auto refs = tensor_refs(layers, input_profile, out.adam);
        const json& listed = h.at("tensors");
        if (listed.size() != refs.size()) throw CorruptionError("checkpoint tensor list does not match its config");
        for (std::size_t i = 0; i < refs.size(); ++i) {
            const auto name = listed[i].at("name").get<std::string>();
            const auto shape = listed[i].at("shape").get<std::vector<std::size_t>>();
            if (name != refs[i].name || shape != refs[i].shape)
                throw CorruptionError("checkpoint tensor '" + name + "' does not match the expected '" +
                                      refs[i].name + "'");
            for (double& v : *refs[i].data) v = std::bit_cast<double>(get_le<std::uint64_t>(bytes, pos));
        }
        if (pos != bytes.size() - 8) throw CorruptionError("checkpoint has trailing bytes");
        out.params = NetworkParams(nc, std::move(layers), std::move(input_profile));
        return out;
    } catch (const json::exception& e) {
        throw CorruptionError(std::string("checkpoint header malformed: ") + e.what());
    } catch (const ConfigError& e) {
        throw CorruptionError(std::string("checkpoint header invalid: ") + e.what());
    }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    write_file_atomic(path, encode_checkpoint(ckpt));
    write_file_atomic(path.string() + ".json", checkpoint_header(ckpt).dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

}  // namespace wesnet
