#ifndef TSDF_DETAIL_MD5_HPP
#define TSDF_DETAIL_MD5_HPP

#include <cstddef>
#include <span>
#include <string>

namespace tsdf::detail {

/// Lowercase hex MD5 digest (RFC 1321), used to verify optional per-file
/// checksum metadata.
std::string md5_hex(std::span<const std::byte> data);

} // namespace tsdf::detail

#endif
