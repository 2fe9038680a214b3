#include "resoneq/checkpoint.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace resoneq {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'R', 'N', 'E', 'Q', 'C', 'K', 'P', '1'};

json ffn_to_json(const FfnSpec& spec) {
    return json{{"block_sizes", spec.block_sizes}, {"input_dim", spec.input_dim}};
}

FfnSpec ffn_from_json(const json& j) {
    FfnSpec spec;
    if (j.contains("block_sizes")) spec.block_sizes = j.at("block_sizes").get<std::vector<std::size_t>>();
    if (j.contains("input_dim")) spec.input_dim = j.at("input_dim").get<std::size_t>();
    spec.validate();
    return spec;
}

json drn_to_json(const DrnSpec& spec) {
    return json{{"n_blocks", spec.n_blocks},
                {"maps", spec.maps_schedule},
                {"kernel_size", spec.kernel_size},
                {"dilations", spec.dilation_schedule},
                {"pool_window", spec.pool_window},
                {"final_block_size", spec.final_block_size},
                {"input_channels", spec.input_channels},
                {"input_length", spec.input_length}};
}

DrnSpec drn_from_json(const json& j) {
    DrnSpec spec;
    if (j.contains("n_blocks")) spec.n_blocks = j.at("n_blocks").get<std::size_t>();
    if (j.contains("maps")) spec.maps_schedule = j.at("maps").get<std::vector<std::size_t>>();
    if (j.contains("kernel_size")) spec.kernel_size = j.at("kernel_size").get<std::size_t>();
    if (j.contains("dilations"))
        spec.dilation_schedule = j.at("dilations").get<std::vector<std::size_t>>();
    if (j.contains("pool_window")) spec.pool_window = j.at("pool_window").get<std::size_t>();
    if (j.contains("final_block_size"))
        spec.final_block_size = j.at("final_block_size").get<std::size_t>();
    if (j.contains("input_channels"))
        spec.input_channels = j.at("input_channels").get<std::size_t>();
    if (j.contains("input_length")) spec.input_length = j.at("input_length").get<std::size_t>();
    spec.validate();
    return spec;
}

json arch_to_json_obj(const ArchSpec& arch) {
    json j;
    j["arch"] = arch.kind_name();
    switch (arch.kind) {
        case ArchSpec::Kind::Ffn:
            j["ffn"] = ffn_to_json(arch.ffn);
            break;
        case ArchSpec::Kind::Drn:
            j["drn"] = drn_to_json(arch.drn);
            break;
        case ArchSpec::Kind::Baseline: {
            // constant stored as a bit-exact integer image of the double
            std::uint64_t bits = 0;
            std::memcpy(&bits, &arch.baseline_constant, sizeof(bits));
            j["constant"] = arch.baseline_constant;
            j["constant_bits"] = bits;
            break;
        }
    }
    return j;
}

ArchSpec arch_from_json_obj(const json& j) {
    ArchSpec arch = ArchSpec::from_kind_name(j.at("arch").get<std::string>());
    switch (arch.kind) {
        case ArchSpec::Kind::Ffn:
            if (j.contains("ffn")) arch.ffn = ffn_from_json(j.at("ffn"));
            break;
        case ArchSpec::Kind::Drn:
            if (j.contains("drn")) arch.drn = drn_from_json(j.at("drn"));
            break;
        case ArchSpec::Kind::Baseline:
            if (j.contains("constant_bits")) {
                const auto bits = j.at("constant_bits").get<std::uint64_t>();
                std::memcpy(&arch.baseline_constant, &bits, sizeof(bits));
            } else if (j.contains("constant")) {
                arch.baseline_constant = j.at("constant").get<double>();
            }
            break;
    }
    return arch;
}

} // namespace

std::string arch_spec_to_json(const ArchSpec& arch) { return arch_to_json_obj(arch).dump(2); }

ArchSpec arch_spec_from_json(const std::string& text) {
    return arch_from_json_obj(json::parse(text));
}

ArchSpec load_arch_spec_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_arch_spec_file: cannot open '" + path + "'");
    json j;
    f >> j;
    return arch_from_json_obj(j);
}

void save_checkpoint(const std::string& path, const TrainedModel& model) {
    json header;
    header["format_version"] = 1;
    header["arch"] = arch_to_json_obj(model.arch);
    header["seed"] = model.seed;

    std::vector<const Tensor*> tensors;
    json manifest = json::array();
    if (model.net) {
        for (const ParamRef& p : model.net->params()) {
            manifest.push_back({{"name", "param." + p.name}, {"shape", p.value->shape()}});
            tensors.push_back(p.value);
        }
        for (const StateRef& s : model.net->state()) {
            manifest.push_back({{"name", "state." + s.name}, {"shape", s.value->shape()}});
            tensors.push_back(s.value);
        }
    }
    header["tensors"] = manifest;

    const std::string header_text = header.dump();
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("save_checkpoint: cannot open '" + path + "'");
    f.write(kMagic, sizeof(kMagic));
    const std::uint64_t header_len = header_text.size();
    f.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
    f.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    for (const Tensor* t : tensors)
        f.write(reinterpret_cast<const char*>(t->data()),
                static_cast<std::streamsize>(t->numel() * sizeof(double)));
    if (!f) throw std::runtime_error("save_checkpoint: write failed for '" + path + "'");
}

TrainedModel load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_checkpoint: cannot open '" + path + "'");

    char magic[8];
    f.read(magic, sizeof(magic));
    if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("load_checkpoint: '" + path + "' is not a checkpoint file");

    std::uint64_t header_len = 0;
    f.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
    std::string header_text(header_len, '\0');
    f.read(header_text.data(), static_cast<std::streamsize>(header_len));
    if (!f) throw std::runtime_error("load_checkpoint: truncated header in '" + path + "'");

    const json header = json::parse(header_text);
    const ArchSpec arch = arch_from_json_obj(header.at("arch"));
    const auto seed = header.at("seed").get<std::uint64_t>();

    TrainedModel model = TrainedModel::build(arch, seed);

    std::map<std::string, Tensor*> by_name;
    if (model.net) {
        for (const ParamRef& p : model.net->params()) by_name["param." + p.name] = p.value;
        for (const StateRef& s : model.net->state()) by_name["state." + s.name] = s.value;
    }

    for (const json& entry : header.at("tensors")) {
        const auto name = entry.at("name").get<std::string>();
        const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
        const auto it = by_name.find(name);
        if (it == by_name.end())
            throw std::runtime_error("load_checkpoint: unknown tensor '" + name + "'");
        if (it->second->shape() != shape)
            throw std::runtime_error("load_checkpoint: shape mismatch for '" + name + "'");
        f.read(reinterpret_cast<char*>(it->second->data()),
               static_cast<std::streamsize>(it->second->numel() * sizeof(double)));
        if (!f) throw std::runtime_error("load_checkpoint: truncated data in '" + path + "'");
    }
    return model;
}

} // namespace resoneq
