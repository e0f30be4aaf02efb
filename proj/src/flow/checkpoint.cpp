// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "gflow/flow/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "gflow/errors.hpp"

namespace gflow::flow {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'G', 'F', 'L', 'O', 'W', 'C', 'K', 'P'};

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::filesystem::path& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw IoError("truncated checkpoint header: " + path.string());
    return v;
}

void write_tensor(std::ostream& out, const num::Tensor& t) {
    out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
}

void read_tensor(std::istream& in, num::Tensor& t, const std::filesystem::path& path) {
    in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!in) throw IoError("truncated checkpoint payload: " + path.string());
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const FlowModel& model, const CheckpointExtras& extras) {
    const num::ParamStore& params = model.params();
    nlohmann::json header;
    header["format"] = "gflow-checkpoint";
    header["version"] = kCheckpointVersion;
    header["config"] = to_json(model.config());
    header["skeleton"] = skel::format_skeleton(model.skeleton());
    header["seed"] = model.seed();
    header["standardization"] = {{"mean", model.standardization().mean.storage()},
                                 {"std", model.standardization().std.storage()}};
    nlohmann::json entries = nlohmann::json::array();
    for (std::size_t i = 0; i < params.count(); ++i) {
        const auto id = static_cast<num::ParamId>(i);
        entries.push_back({{"name", params.name(id)}, {"shape", params.value(id).shape()}});
    }
    header["params"] = entries;
    header["optimizer"] = extras.optimizer ? nlohmann::json{{"step", extras.optimizer->step}} : nlohmann::json(nullptr);
    header["training"] = extras.training;
    const std::string text = header.dump();

    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write checkpoint: " + tmp.string());
        out.write(kMagic, sizeof(kMagic));
        write_pod(out, kCheckpointVersion);
        write_pod(out, static_cast<std::uint64_t>(text.size()));
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        for (std::size_t i = 0; i < params.count(); ++i) write_tensor(out, params.value(static_cast<num::ParamId>(i)));
        if (extras.optimizer) {
            GFLOW_CHECK(extras.optimizer->first_moment.size() == params.count(), ShapeError,
                        "optimizer state does not match the parameter store");
            for (const auto& m : extras.optimizer->first_moment) write_tensor(out, m);
            for (const auto& v : extras.optimizer->second_moment) write_tensor(out, v);
        }
        if (!out) throw IoError("failed writing checkpoint: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move checkpoint into place: " + path.string() + ": " + ec.message());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw IoError("not a gflow checkpoint: " + path.string());
    const auto version = read_pod<std::uint32_t>(in, path);
    if (version != kCheckpointVersion) {
        throw IoError("unsupported checkpoint version " + std::to_string(version) + ": " + path.string());
    }
    const auto length = read_pod<std::uint64_t>(in, path);
    if (length > (1ULL << 30)) throw IoError("corrupt checkpoint header length: " + path.string());
    std::string text(length, '\0');
    in.read(text.data(), static_cast<std::streamsize>(length));
    if (!in) throw IoError("truncated checkpoint header: " + path.string());

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("corrupt checkpoint header in " + path.string() + ": " + e.what());
    }
    const ModelConfig config = model_config_from_json(header.at("config"));
    skel::SkeletonSpec skeleton = skel::parse_skeleton(header.at("skeleton").get<std::string>());
    FlowModel model(config, std::move(skeleton), header.at("seed").get<std::uint64_t>());

    const std::size_t m = config.markers, c = config.channels;
    Standardization st{num::Tensor({m, c}, header.at("standardization").at("mean").get<std::vector<double>>()),
                       num::Tensor({m, c}, header.at("standardization").at("std").get<std::vector<double>>())};
    model.set_standardization(std::move(st));

    num::ParamStore& params = model.params();
    const auto& entries = header.at("params");
    if (entries.size() != params.count()) {
        throw ConfigError("checkpoint holds " + std::to_string(entries.size()) + " parameters, model has " +
                          std::to_string(params.count()));
    }
    for (std::size_t i = 0; i < params.count(); ++i) {
        const auto id = static_cast<num::ParamId>(i);
        const auto name = entries[i].at("name").get<std::string>();
        const auto shape = entries[i].at("shape").get<num::Shape>();
        if (name != params.name(id) || shape != params.value(id).shape()) {
            throw ConfigError("checkpoint parameter " + name + " " + num::shape_string(shape) +
                              " does not match model parameter " + params.name(id) + " " +
                              num::shape_string(params.value(id).shape()));
        }
        read_tensor(in, params.value(id), path);
    }

    CheckpointExtras extras;
    if (!header.at("optimizer").is_null()) {
        num::AdamState state = num::AdamState::zeros_like(params);
        state.step = header.at("optimizer").at("step").get<std::int64_t>();
        for (auto& t : state.first_moment) read_tensor(in, t, path);
        for (auto& t : state.second_moment) read_tensor(in, t, path);
        extras.optimizer = std::move(state);
    }
    extras.training = header.value("training", nlohmann::json::object());
    return {std::move(model), std::move(extras)};
}

}  // namespace gflow::flow
