#include "wesnet/io.hpp"

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

#include <unistd.h>

#include "wesnet/errors.hpp"

namespace wesnet {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void fail(const std::string& action, const fs::path& path, int err) {
    throw IoError(action + " '" + path.string() + "': " + std::strerror(err));
}

}  // namespace

void write_file_atomic(const fs::path& path, std::string_view bytes) {
    const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail("cannot create", tmp, errno);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            const int err = errno;
            std::error_code ignored;
            fs::remove(tmp, ignored);
            fail("cannot write", tmp, err);
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        std::error_code ignored;
        fs::remove(tmp, ignored);
        throw IoError("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open", path, errno);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) fail("cannot read", path, errno);
    return ss.str();
}

void ensure_writable_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
    if (::access(dir.c_str(), W_OK) != 0) fail("directory not writable", dir, errno);
}

void guard_overwrite(const fs::path& path, bool overwrite) {
    if (!overwrite && fs::exists(path))
        throw IoError("refusing to overwrite existing '" + path.string() + "' (pass --overwrite)");
}

}  // namespace wesnet
