#include "imstab/report_io.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "imstab/errors.hpp"

namespace imstab {

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) fail(errc::io, "report", "cannot create directory " + path + ": " + ec.message());
}

void write_json_file(const nlohmann::json& j, const std::string& path) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) fail(errc::io, "report", "cannot open " + tmp);
    os << j.dump(2) << '\n';
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(errc::io, "report", "cannot move report into place at " + path + ": " + ec.message());
}

void append_csv_row(const std::string& path, const std::string& header, const std::string& row) {
  // The creator writes header+row in one O_EXCL write; everyone else appends
  // a whole row per write, which POSIX keeps contiguous under O_APPEND.
  int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_APPEND, 0644);
  std::string payload;
  if (fd >= 0) {
    payload = header + "\n" + row + "\n";
  } else {
    fd = ::open(path.c_str(), O_WRONLY | O_APPEND);
    if (fd < 0) fail(errc::io, "report", "cannot open " + path);
    payload = row + "\n";
  }
  ssize_t n = ::write(fd, payload.data(), payload.size());
  ::close(fd);
  if (n != ssize_t(payload.size())) fail(errc::io, "report", "short write to " + path);
}

}  // namespace imstab
