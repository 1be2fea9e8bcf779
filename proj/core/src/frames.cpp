#include "metakg/frames.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <memory>

#include "metakg/digest.hpp"
#include "metakg/error.hpp"

namespace metakg {

std::vector<std::size_t> evenly_spaced(std::size_t available, std::size_t count) {
    std::vector<std::size_t> idx;
    if (count == 0 || available == 0) return idx;
    if (count >= available) {
        idx.resize(available);
        for (std::size_t i = 0; i < available; ++i) idx[i] = i;
        return idx;
    }
    idx.reserve(count);
    for (std::size_t i = 0; i < count; ++i) idx.push_back(i * available / count);
    return idx;
}

std::vector<std::filesystem::path> list_frame_files(const std::filesystem::path& dir) {
    static const std::array<std::string_view, 6> kExt = {".jpg", ".jpeg", ".png", ".webp", ".bmp", ".gif"};
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (std::find(kExt.begin(), kExt.end(), ext) != kExt.end()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

std::vector<std::filesystem::path> DirectoryFrameSampler::frames(const std::string& video_ref) {
    if (!std::filesystem::is_directory(video_ref)) throw InputError("frame directory not found: " + video_ref);
    return list_frame_files(video_ref);
}

std::vector<std::filesystem::path> CommandFrameSampler::frames(const std::string& video_ref) {
    auto out_dir = work_dir_ / sha256_hex(video_ref).substr(0, 16);
    std::filesystem::create_directories(out_dir);
    auto quote = [](const std::string& s) {
        std::string q = "'";
        for (char c : s) q += (c == '\'') ? std::string("'\\''") : std::string(1, c);
        return q + "'";
    };
    std::string cmd;
    for (std::size_t pos = 0; pos < command_.size();) {
        if (command_.compare(pos, 7, "{video}") == 0) {
            cmd += quote(video_ref);
            pos += 7;
        } else if (command_.compare(pos, 5, "{out}") == 0) {
            cmd += quote(out_dir.string());
            pos += 5;
        } else {
            cmd += command_[pos++];
        }
    }
    cmd += " 2>&1";

    std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
    if (!pipe) throw BackendError("cannot start frame sampler: " + cmd, false);
    std::string captured;
    std::array<char, 512> buf{};
    while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe.get()) != nullptr) captured += buf.data();
    int status = pclose(pipe.release());
    if (status != 0) {
        throw BackendError("frame sampler exited with status " + std::to_string(status) + ": " + captured, false);
    }
    return list_frame_files(out_dir);
}

std::vector<std::filesystem::path> prepare_frames(const std::string& video_ref, FrameSamplerClient& sampler,
                                                  std::size_t max_frames) {
    auto all = sampler.frames(video_ref);
    std::vector<std::filesystem::path> picked;
    for (std::size_t i : evenly_spaced(all.size(), max_frames)) picked.push_back(all[i]);
    return picked;
}

}  // namespace metakg
