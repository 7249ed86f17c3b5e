#pragma once

#include "clare/model/clare_model.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>

namespace clare::model {

// Binary layout, all integers and floats little-endian:
//   "CLRE" | version u32 | class_no u32 | latent_dim u32
//   then until end of stream, per parameter:
//   name_len u32 | name bytes | rank u32 | dims u32 * rank | f64 * product(dims)
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    std::uint32_t class_no = 0;
    std::uint32_t latent_dim = 0;
    ParamTape params;
};

void write_checkpoint(std::ostream& out, std::uint32_t class_no, std::uint32_t latent_dim, const ParamTape& params);
Checkpoint read_checkpoint(std::istream& in);

void save_model(const ClareModel& model, const std::filesystem::path& path);
ClareModel load_model(const std::filesystem::path& path);
// Rebuilds a full model, recovering layer widths from the stored shapes.
ClareModel model_from_checkpoint(Checkpoint checkpoint);

} // namespace clare::model
