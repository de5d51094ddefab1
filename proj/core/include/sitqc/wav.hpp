#pragma once

#include <filesystem>

#include "sitqc/audio.hpp"

namespace sitqc {

/// Read a RIFF/WAVE file. Accepts integer PCM (8/16/24/32-bit) and 32-bit
/// float, plain or WAVE_FORMAT_EXTENSIBLE, 1-8 channels. Integer samples are
/// normalized by the type's maximum magnitude (e.g. 32768 for 16-bit).
/// Errors are reported distinctly: "missing file", "malformed", "unsupported".
AudioClip read_wav(const std::filesystem::path& path);

/// Write 16-bit integer PCM. Samples are clamped to [-1, 1] and rounded
/// half away from zero, so identical input produces byte-identical files.
void write_wav16(const AudioClip& clip, const std::filesystem::path& path);

}  // namespace sitqc
