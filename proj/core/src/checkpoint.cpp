#include "querysum/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>

#include <json.hpp>

namespace querysum {

using nlohmann::json;

std::string model_config_to_json(const ModelConfig& c) {
    json j;
    j["vocab_size"] = c.vocab_size;
    j["embed_dim"] = c.embed_dim;
    j["feature_dim"] = c.feature_dim;
    j["max_tokens"] = c.max_tokens;
    j["ffn_mult"] = c.ffn_mult;
    j["num_classes"] = c.num_classes;
    j["use_semantics_booster"] = c.use_semantics_booster;
    j["use_mutual_attention"] = c.use_mutual_attention;
    return j.dump();
}

ModelConfig model_config_from_json(const std::string& text) {
    json j = json::parse(text);
    ModelConfig c;
    c.vocab_size = j.at("vocab_size").get<int>();
    c.embed_dim = j.at("embed_dim").get<int>();
    c.feature_dim = j.at("feature_dim").get<int>();
    c.max_tokens = j.at("max_tokens").get<int>();
    c.ffn_mult = j.at("ffn_mult").get<int>();
    c.num_classes = j.at("num_classes").get<int>();
    c.use_semantics_booster = j.at("use_semantics_booster").get<bool>();
    c.use_mutual_attention = j.at("use_mutual_attention").get<bool>();
    return c;
}

std::string fnv1a_hex(std::string_view bytes) {
    uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char b : bytes) {
        hash ^= b;
        hash *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return std::string(buf);
}

std::string file_fnv1a_hex(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), "cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return fnv1a_hex(bytes);
}

namespace {

void write_f64_le(std::ostream& out, double value) {
    const uint64_t bits = std::bit_cast<uint64_t>(value);
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.write(buf, 8);
}

double read_f64_le(std::istream& in) {
    char buf[8];
    in.read(buf, 8);
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
    return std::bit_cast<double>(bits);
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, ModelParams& params, const std::string& extra_json) {
    json header = json::parse(extra_json);
    header["format"] = "querysum.checkpoint.v1";
    header["model_config"] = json::parse(model_config_to_json(params.config));
    json blocks = json::array();
    std::vector<ParamView> views = params.param_views();
    for (const ParamView& v : views) {
        blocks.push_back({{"name", v.name}, {"size", v.values.size()}});
    }
    header["blocks"] = blocks;

    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), "cannot write checkpoint " + path.string());
    out << header.dump() << '\n';
    for (const ParamView& v : views) {
        for (double value : v.values) write_f64_le(out, value);
    }
    require(static_cast<bool>(out), "short write on checkpoint " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), "cannot open checkpoint " + path.string());
    std::string header_line;
    std::getline(in, header_line);
    json header = json::parse(header_line);
    require(header.value("format", "") == "querysum.checkpoint.v1",
            "unrecognized checkpoint format in " + path.string());

    LoadedCheckpoint loaded;
    loaded.header_json = header_line;
    loaded.params = ModelParams::zeros(model_config_from_json(header.at("model_config").dump()));

    std::vector<ParamView> views = loaded.params.param_views();
    const json& blocks = header.at("blocks");
    require(blocks.size() == views.size(), "checkpoint block count mismatch in " + path.string());
    for (size_t i = 0; i < views.size(); ++i) {
        require(blocks[i].at("name").get<std::string>() == views[i].name &&
                    blocks[i].at("size").get<size_t>() == views[i].values.size(),
                "checkpoint block '" + views[i].name + "' does not match the stored model config");
        for (double& value : views[i].values) value = read_f64_le(in);
    }
    require(static_cast<bool>(in), "checkpoint payload truncated in " + path.string());
    return loaded;
}

} // namespace querysum
