#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace metakg {

/// `count` indices spread evenly over [0, available): floor(i * available / count).
/// Returns every index when count >= available.
std::vector<std::size_t> evenly_spaced(std::size_t available, std::size_t count);

/// Produces frame image paths for a video reference.
class FrameSamplerClient {
public:
    virtual ~FrameSamplerClient() = default;
    /// All frames the tool produced, in temporal order.
    virtual std::vector<std::filesystem::path> frames(const std::string& video_ref) = 0;
};

/// Treats the video reference as a directory of already-extracted frames.
class DirectoryFrameSampler final : public FrameSamplerClient {
public:
    std::vector<std::filesystem::path> frames(const std::string& video_ref) override;
};

/// Runs an external command such as
///   "ffmpeg -loglevel error -i {video} -vf fps=1 {out}/%05d.jpg"
/// and collects the images written to {out}. A missing tool or non-zero exit
/// throws BackendError carrying the captured output.
class CommandFrameSampler final : public FrameSamplerClient {
public:
    CommandFrameSampler(std::string command_template, std::filesystem::path work_dir)
        : command_(std::move(command_template)), work_dir_(std::move(work_dir)) {}
    std::vector<std::filesystem::path> frames(const std::string& video_ref) override;

private:
    std::string command_;
    std::filesystem::path work_dir_;
};

/// Image files in `dir` sorted by file name.
std::vector<std::filesystem::path> list_frame_files(const std::filesystem::path& dir);

/// At most `max_frames` evenly spaced frames from the sampler's output.
std::vector<std::filesystem::path> prepare_frames(const std::string& video_ref, FrameSamplerClient& sampler,
                                                  std::size_t max_frames = 16);

}  // namespace metakg
