#pragma once

#include <filesystem>
#include <string>

#include "polargs/core/camera.h"
#include "polargs/core/image.h"

namespace polargs {

// PFM: "Pf" (1 channel) or "PF" (3 channels), little-endian float32, rows
// stored bottom to top as the format prescribes.
void WritePfm(const std::filesystem::path& path, const FloatImage& img);
FloatImage ReadPfm(const std::filesystem::path& path);

// 16-bit PNG (gray or RGB). Values map linearly: v / 65535, clamped on write.
void WritePng16(const std::filesystem::path& path, const FloatImage& img);
FloatImage ReadPng16(const std::filesystem::path& path);

// 8-bit gray PNG, 0 or 255.
void WriteMaskPng(const std::filesystem::path& path, const Mask& mask);
Mask ReadMaskPng(const std::filesystem::path& path);

// {fx, fy, cx, cy, width, height, world_to_cam: 16 numbers row-major}
std::string CameraToJson(const CameraModel& cam);
CameraModel CameraFromJson(const std::string& text);
void WriteCameraJson(const std::filesystem::path& path, const CameraModel& cam);
CameraModel ReadCameraJson(const std::filesystem::path& path);

std::string ReadTextFile(const std::filesystem::path& path);
void WriteTextFile(const std::filesystem::path& path, const std::string& text);

}  // namespace polargs
