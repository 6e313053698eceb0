/// @file vgrid_io.hpp
/// @brief Reader/writer for the .vgrid volume container.
///
/// Layout: line 1 is a JSON header terminated by a single '\n' with keys
///   magic="vgrid1", kind in {"scalar","label","soft"}, dims=[nx,ny,nz],
///   spacing=[sx,sy,sz], dtype in {"f32","u8"}, channels (1 for scalar/label).
/// The raw little-endian payload follows immediately, channel-major then
/// x-fastest. Scalar and soft payloads are f32, labels are u8. Writing is
/// canonical (fixed key order), so write -> read -> write is byte identical.

#pragma once

#include <filesystem>
#include <variant>

#include "lamina/volume.hpp"

namespace lamina {

using VgridValue = std::variant<ScalarField3D, LabelField3D, ChannelStack>;

VgridValue read_vgrid(const std::filesystem::path& path);

/// Typed readers; throw UnsupportedDtype when the file holds another kind.
ScalarField3D read_scalar(const std::filesystem::path& path);
LabelField3D read_labels(const std::filesystem::path& path);
ChannelStack read_soft(const std::filesystem::path& path);

void write_vgrid(const ScalarField3D& f, const std::filesystem::path& path);
void write_vgrid(const LabelField3D& f, const std::filesystem::path& path);
void write_vgrid(const ChannelStack& f, const std::filesystem::path& path);

}  // namespace lamina
