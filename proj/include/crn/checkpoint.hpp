#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "crn/errors.hpp"
#include "crn/model.hpp"
#include "crn/optim.hpp"
#include "crn/tensor.hpp"
#include "crn/tensor_io.hpp"

namespace crn {

inline constexpr char kCheckpointMagic[8] = {'C', 'R', 'N', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint64_t kCheckpointVersion = 1;

struct Checkpoint {
    std::string config_text;  // flat key=value snapshot of the run configuration
    std::vector<std::pair<std::string, Tensor>> params;
    bool has_optimizer = false;
    OptimizerSnapshot optimizer;
};

namespace detail {

inline void put_string(std::ostream& os, const std::string& s) {
    put_u64_le(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& is, const char* what) {
    std::uint64_t n = get_u64_le(is, what);
    if (n > (1u << 26)) throw CheckpointError(std::string("implausible length for ") + what);
    std::string s(static_cast<std::size_t>(n), '\0');
    is.read(s.data(), static_cast<std::streamsize>(n));
    if (!is) throw CheckpointError(std::string("truncated checkpoint while reading ") + what);
    return s;
}

}  // namespace detail

inline void save_checkpoint(std::ostream& os, const Checkpoint& ckpt) {
    os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    detail::put_u64_le(os, kCheckpointVersion);
    detail::put_string(os, ckpt.config_text);
    detail::put_u64_le(os, ckpt.params.size());
    for (const auto& [name, tensor] : ckpt.params) {
        detail::put_string(os, name);
        dump_tensor(os, tensor);
    }
    detail::put_u64_le(os, ckpt.has_optimizer ? 1 : 0);
    if (ckpt.has_optimizer) {
        detail::put_u64_le(os, ckpt.optimizer.step);
        detail::put_u64_le(os, ckpt.optimizer.slots.size());
        for (const auto& [name, slot] : ckpt.optimizer.slots) {
            detail::put_string(os, name);
            detail::put_u64_le(os, slot.m.size());
            for (Real v : slot.m) detail::put_f64_le(os, static_cast<double>(v));
            for (Real v : slot.v) detail::put_f64_le(os, static_cast<double>(v));
        }
    }
    if (!os) throw CheckpointError("failed writing checkpoint stream");
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw CheckpointError("cannot open checkpoint for writing: " + path);
    save_checkpoint(os, ckpt);
}

inline Checkpoint load_checkpoint(std::istream& is) {
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::string(magic, 8) != std::string(kCheckpointMagic, 8)) {
        throw CheckpointError("not a checkpoint file");
    }
    Checkpoint ckpt;
    try {
        std::uint64_t version = detail::get_u64_le(is, "checkpoint version");
        if (version != kCheckpointVersion) {
            throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
        }
        ckpt.config_text = detail::get_string(is, "config snapshot");
        std::uint64_t n_params = detail::get_u64_le(is, "parameter count");
        for (std::uint64_t i = 0; i < n_params; ++i) {
            std::string name = detail::get_string(is, "parameter name");
            Tensor t = load_tensor(is);
            ckpt.params.emplace_back(std::move(name), std::move(t));
        }
        ckpt.has_optimizer = detail::get_u64_le(is, "optimizer flag") != 0;
        if (ckpt.has_optimizer) {
            ckpt.optimizer.step = static_cast<std::size_t>(detail::get_u64_le(is, "optimizer step"));
            std::uint64_t n_slots = detail::get_u64_le(is, "optimizer slot count");
            for (std::uint64_t i = 0; i < n_slots; ++i) {
                std::string name = detail::get_string(is, "optimizer slot name");
                std::uint64_t n = detail::get_u64_le(is, "optimizer slot size");
                AdamSlot slot;
                slot.m.resize(static_cast<std::size_t>(n));
                slot.v.resize(static_cast<std::size_t>(n));
                for (auto& v : slot.m) v = static_cast<Real>(detail::get_f64_le(is, "first moment"));
                for (auto& v : slot.v) v = static_cast<Real>(detail::get_f64_le(is, "second moment"));
                ckpt.optimizer.slots.emplace_back(std::move(name), std::move(slot));
            }
        }
    } catch (const ParseError& e) {
        throw CheckpointError(std::string("truncated or corrupt checkpoint: ") + e.what());
    }
    return ckpt;
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CheckpointError("cannot open checkpoint: " + path);
    return load_checkpoint(is);
}

inline Checkpoint make_checkpoint(const Model& model, const std::string& config_text,
                                  const OptimizerSnapshot* optimizer = nullptr) {
    Checkpoint ckpt;
    ckpt.config_text = config_text;
    ckpt.params = model.named_params();
    if (optimizer) {
        ckpt.has_optimizer = true;
        ckpt.optimizer = *optimizer;
    }
    return ckpt;
}

// Copies checkpoint values into an already constructed model; names and
// shapes must match exactly.
inline void apply_checkpoint(Model& model, const Checkpoint& ckpt) {
    auto params = model.named_params();
    if (params.size() != ckpt.params.size()) {
        throw CheckpointError("checkpoint has " + std::to_string(ckpt.params.size()) +
                              " parameters, model has " + std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& [want_name, stored] = ckpt.params[i];
        auto& [have_name, live] = params[i];
        if (want_name != have_name) {
            throw CheckpointError("checkpoint parameter " + want_name +
                                  " does not match model parameter " + have_name);
        }
        if (stored.shape() != live.shape()) {
            throw CheckpointError("checkpoint parameter " + want_name + " has shape " +
                                  shape_str(stored.shape()) + ", model expects " +
                                  shape_str(live.shape()));
        }
        auto src = stored.values();
        auto dst = live.values();
        for (std::size_t j = 0; j < src.size(); ++j) dst[j] = src[j];
    }
}

}  // namespace crn
