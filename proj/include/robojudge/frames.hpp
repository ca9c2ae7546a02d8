#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "robojudge/util.hpp"

namespace robojudge {

struct EncodedFrame {
  std::vector<std::uint8_t> image_bytes;
  int width = 0;
  int height = 0;
  std::string media_type;

  friend bool operator==(const EncodedFrame&, const EncodedFrame&) = default;
};

struct FrameSequence {
  std::vector<EncodedFrame> frames;
  std::string source_video_id;
  std::vector<int> sample_indices;  // original frame positions, strictly increasing

  friend bool operator==(const FrameSequence&, const FrameSequence&) = default;
};

// Evenly spaced indices over [0, total_frames), always keeping the first and
// last frame. Short videos pass through whole.
inline std::vector<int> sample_frames(int total_frames, int n) {
  if (total_frames < 1) throw ValidationError("sample_frames: total_frames must be >= 1");
  if (n < 1) throw ValidationError("sample_frames: n must be >= 1");
  std::vector<int> indices;
  if (total_frames <= n) {
    indices.resize(static_cast<std::size_t>(total_frames));
    for (int i = 0; i < total_frames; ++i) indices[static_cast<std::size_t>(i)] = i;
    return indices;
  }
  if (n == 1) return {0};
  indices.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    indices.push_back(static_cast<int>(
        (static_cast<long>(i) * (total_frames - 1)) / (n - 1)));
  }
  return indices;
}

inline nlohmann::json to_json(const FrameSequence& seq) {
  nlohmann::json frames = nlohmann::json::array();
  for (const EncodedFrame& f : seq.frames) {
    frames.push_back({{"image_base64", base64_encode(f.image_bytes)},
                      {"width", f.width},
                      {"height", f.height},
                      {"media_type", f.media_type}});
  }
  return nlohmann::json{{"schema", "frame_sequence.v1"},
                        {"source_video_id", seq.source_video_id},
                        {"sample_indices", seq.sample_indices},
                        {"frames", std::move(frames)}};
}

inline FrameSequence frame_sequence_from_json(const nlohmann::json& j) {
  FrameSequence seq;
  seq.source_video_id = j.at("source_video_id").get<std::string>();
  seq.sample_indices = j.at("sample_indices").get<std::vector<int>>();
  for (const auto& f : j.at("frames")) {
    EncodedFrame frame;
    frame.image_bytes = base64_decode(f.at("image_base64").get<std::string>());
    frame.width = f.at("width").get<int>();
    frame.height = f.at("height").get<int>();
    frame.media_type = f.at("media_type").get<std::string>();
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

// Frame decoding is delegated to an external decoder subprocess. The command
// templates take placeholders:
//   probe:   {input}
//   extract: {input} {indices} {output_dir} {max_dim} {format} {quality}
// probe prints the total frame count; extract writes one image per requested
// index plus a manifest.json of [{index, file, width, height}, ...].
struct FrameExtractorConfig {
  std::string probe_command;
  std::string extract_command;
  int n_frames = 16;
  int max_dim = 512;
  std::string format = "jpeg";
  int quality = 85;
  std::optional<std::filesystem::path> cache_dir;

  void validate() const {
    if (probe_command.empty() || extract_command.empty()) {
      throw ValidationError("frame extractor: decoder commands not configured");
    }
    if (n_frames < 1) throw ValidationError("frame extractor: n_frames must be >= 1");
    if (max_dim < 1) throw ValidationError("frame extractor: max_dim must be >= 1");
    if (format.empty()) throw ValidationError("frame extractor: empty image format");
    if (quality < 1 || quality > 100) {
      throw ValidationError("frame extractor: quality must be in [1, 100]");
    }
  }
};

namespace detail {

inline std::string substitute_placeholder(std::string text, const std::string& name,
                                          const std::string& value) {
  const std::string needle = "{" + name + "}";
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    text.replace(pos, needle.size(), value);
    pos += value.size();
  }
  return text;
}

inline std::string media_type_for(const std::string& format) {
  if (format == "jpg" || format == "jpeg") return "image/jpeg";
  if (format == "png") return "image/png";
  if (format == "webp") return "image/webp";
  return "application/octet-stream";
}

}  // namespace detail

class FrameExtractor {
 public:
  explicit FrameExtractor(FrameExtractorConfig config) : config_(std::move(config)) {
    config_.validate();
  }

  const FrameExtractorConfig& config() const { return config_; }

  // Digest identifying one extraction result; cache file name.
  std::string cache_digest(const std::filesystem::path& video_path) const {
    std::string video_digest = sha256_hex(std::span<const std::uint8_t>(video_bytes(video_path)));
    nlohmann::json key{{"video_sha256", video_digest},
                       {"n_frames", config_.n_frames},
                       {"max_dim", config_.max_dim},
                       {"format", config_.format},
                       {"quality", config_.quality}};
    return sha256_hex(key.dump());
  }

  FrameSequence extract(const std::filesystem::path& video_path,
                        const std::string& video_id) const {
    std::optional<std::filesystem::path> cache_file;
    if (config_.cache_dir.has_value()) {
      cache_file = *config_.cache_dir / (cache_digest(video_path) + ".json");
      if (std::filesystem::exists(*cache_file)) {
        nlohmann::json j = nlohmann::json::parse(read_file_text(*cache_file));
        FrameSequence seq = frame_sequence_from_json(j);
        seq.source_video_id = video_id;
        return seq;
      }
    }
    FrameSequence seq = extract_uncached(video_path, video_id);
    if (cache_file.has_value()) {
      write_file_atomic(*cache_file, to_json(seq).dump(2) + "\n");
    }
    return seq;
  }

  int probe_frame_count(const std::filesystem::path& video_path) const {
    if (!std::filesystem::exists(video_path)) {
      throw DecodeError("video not found: " + video_path.string());
    }
    std::string cmd =
        detail::substitute_placeholder(config_.probe_command, "input",
                                       shell_quote(video_path.string()));
    CommandResult result = run_command(cmd);
    if (result.exit_code != 0) {
      throw DecodeError("decoder probe failed for " + video_path.string() +
                        " (exit " + std::to_string(result.exit_code) + ")");
    }
    try {
      std::size_t consumed = 0;
      int count = std::stoi(result.output, &consumed);
      if (result.output.find_first_not_of(" \t\r\n", consumed) != std::string::npos) {
        throw std::invalid_argument("trailing text");
      }
      return count;
    } catch (const std::exception&) {
      throw DecodeError("decoder probe printed a non-integer for " + video_path.string());
    }
  }

 private:
  static std::vector<std::uint8_t> video_bytes(const std::filesystem::path& path) {
    try {
      return read_file_bytes(path);
    } catch (const ValidationError& e) {
      throw DecodeError(e.what());
    }
  }

  FrameSequence extract_uncached(const std::filesystem::path& video_path,
                                 const std::string& video_id) const {
    int total = probe_frame_count(video_path);
    if (total < 1) throw DecodeError("zero-frame video: " + video_path.string());
    std::vector<int> indices = sample_frames(total, config_.n_frames);

    namespace fs = std::filesystem;
    static std::atomic<unsigned> counter{0};
    fs::path out_dir = fs::temp_directory_path() /
                       ("robojudge-frames-" + std::to_string(::getpid()) + "-" +
                        std::to_string(counter.fetch_add(1)));
    fs::create_directories(out_dir);
    struct DirGuard {
      fs::path dir;
      ~DirGuard() {
        std::error_code ec;
        fs::remove_all(dir, ec);
      }
    } guard{out_dir};

    std::string index_list;
    for (std::size_t i = 0; i < indices.size(); ++i) {
      if (i > 0) index_list += ",";
      index_list += std::to_string(indices[i]);
    }
    std::string cmd = config_.extract_command;
    cmd = detail::substitute_placeholder(cmd, "input", shell_quote(video_path.string()));
    cmd = detail::substitute_placeholder(cmd, "indices", shell_quote(index_list));
    cmd = detail::substitute_placeholder(cmd, "output_dir", shell_quote(out_dir.string()));
    cmd = detail::substitute_placeholder(cmd, "max_dim", std::to_string(config_.max_dim));
    cmd = detail::substitute_placeholder(cmd, "format", shell_quote(config_.format));
    cmd = detail::substitute_placeholder(cmd, "quality", std::to_string(config_.quality));
    CommandResult result = run_command(cmd);
    if (result.exit_code != 0) {
      throw DecodeError("decoder failed for " + video_path.string() + " (exit " +
                        std::to_string(result.exit_code) + ")");
    }

    fs::path manifest_path = out_dir / "manifest.json";
    if (!fs::exists(manifest_path)) {
      throw DecodeError("decoder wrote no manifest for " + video_path.string());
    }
    nlohmann::json manifest = nlohmann::json::parse(read_file_text(manifest_path), nullptr, false);
    if (manifest.is_discarded() || !manifest.is_array() ||
        manifest.size() != indices.size()) {
      throw DecodeError("decoder manifest malformed for " + video_path.string());
    }
    FrameSequence seq;
    seq.source_video_id = video_id;
    seq.sample_indices = indices;
    const std::string media_type = detail::media_type_for(config_.format);
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const nlohmann::json& entry = manifest[i];
      if (entry.at("index").get<int>() != indices[i]) {
        throw DecodeError("decoder returned frames out of order for " + video_path.string());
      }
      EncodedFrame frame;
      frame.width = entry.at("width").get<int>();
      frame.height = entry.at("height").get<int>();
      if (frame.width < 1 || frame.height < 1) {
        throw DecodeError("decoder reported a degenerate frame size for " +
                          video_path.string());
      }
      if (std::max(frame.width, frame.height) > config_.max_dim) {
        throw DecodeError("decoder exceeded max_dim for " + video_path.string());
      }
      frame.media_type = media_type;
      frame.image_bytes = read_file_bytes(out_dir / entry.at("file").get<std::string>());
      seq.frames.push_back(std::move(frame));
    }
    return seq;
  }

  FrameExtractorConfig config_;
};

}  // namespace robojudge
