#pragma once

#include <filesystem>
#include <fstream>
#include <string>

namespace testutil {

/// Scratch directory wiped when the object goes out of scope.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        dir_ = std::filesystem::temp_directory_path() /
               ("serocontact_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(dir_);
        std::filesystem::create_directories(dir_);
    }
    ~TempDir() { std::filesystem::remove_all(dir_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    std::string write(const std::string& name, const std::string& content) const {
        std::string p = path(name);
        std::ofstream out(p);
        out << content;
        return p;
    }

private:
    std::filesystem::path dir_;
};

} // namespace testutil
