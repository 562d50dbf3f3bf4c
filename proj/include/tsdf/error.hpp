#ifndef TSDF_ERROR_HPP
#define TSDF_ERROR_HPP

#include <stdexcept>
#include <string>
#include <utility>

namespace tsdf {

/// Exception carrying a stable machine-readable code alongside the message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

} // namespace tsdf

#endif
