#include <httplib.h>

#include <fstream>
#include <regex>
#include <system_error>

#include "occupant/ingest.hpp"

namespace occupant::ingest {

namespace {

struct ParsedUrl {
  std::string scheme_host_port;
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  static const std::regex re(R"(^(https?)://([A-Za-z0-9.\-]+|\[[0-9A-Fa-f:.]+\])(:([0-9]{1,5}))?(/[^\s#]*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) {
    throw FetchError(FetchErrorKind::InvalidUrl, "malformed URL: '" + url + "'");
  }
  ParsedUrl out;
  out.scheme_host_port = m[1].str() + "://" + m[2].str();
  if (m[4].matched) {
    const int port = std::stoi(m[4].str());
    if (port < 1 || port > 65535) {
      throw FetchError(FetchErrorKind::InvalidUrl, "URL port out of range: '" + url + "'");
    }
    out.scheme_host_port += ":" + m[4].str();
  }
  out.path = m[5].matched ? m[5].str() : "/";
  return out;
}

}  // namespace

FetchResult fetch_recs(const std::string& url, const std::filesystem::path& dest, bool overwrite) {
  const ParsedUrl parsed = parse_url(url);
  std::error_code ec;
  if (!overwrite && std::filesystem::exists(dest, ec)) {
    return FetchResult{dest, 0, true};
  }
  if (dest.has_parent_path()) {
    std::filesystem::create_directories(dest.parent_path(), ec);
    if (ec) {
      throw FetchError(FetchErrorKind::DiskWrite,
                       "cannot create directory " + dest.parent_path().string() + ": " + ec.message());
    }
  }
  const std::filesystem::path tmp = dest.string() + ".part";
  std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw FetchError(FetchErrorKind::DiskWrite, "cannot open " + tmp.string() + " for writing");
  }

  httplib::Client client(parsed.scheme_host_port);
  client.set_follow_location(true);
  client.set_connection_timeout(20, 0);
  client.set_read_timeout(120, 0);

  std::uint64_t bytes = 0;
  bool write_failed = false;
  int status = 0;
  auto res = client.Get(
      parsed.path,
      [&](const httplib::Response& response) {
        status = response.status;
        return true;
      },
      [&](const char* data, std::size_t len) {
        // Error bodies are not persisted.
        if (status < 200 || status >= 300) return true;
        out.write(data, static_cast<std::streamsize>(len));
        if (!out) {
          write_failed = true;
          return false;
        }
        bytes += len;
        return true;
      });
  out.close();

  auto discard = [&] { std::filesystem::remove(tmp, ec); };
  if (write_failed || (res && !out)) {
    discard();
    throw FetchError(FetchErrorKind::DiskWrite, "failed writing " + tmp.string());
  }
  if (!res) {
    discard();
    throw FetchError(FetchErrorKind::Network,
                     "network failure fetching " + url + ": " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    discard();
    throw FetchError(FetchErrorKind::HttpStatus,
                     "HTTP " + std::to_string(res->status) + " fetching " + url, res->status);
  }
  std::filesystem::rename(tmp, dest, ec);
  if (ec) {
    discard();
    throw FetchError(FetchErrorKind::DiskWrite, "cannot move download to " + dest.string() + ": " +
                                                    ec.message());
  }
  return FetchResult{dest, bytes, false};
}

}  // namespace occupant::ingest
