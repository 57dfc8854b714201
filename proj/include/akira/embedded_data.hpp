#pragma once

#include <map>
#include <string_view>

namespace akira::embedded {

/// Files under data/, keyed by path relative to it ("prompts/select.txt").
const std::map<std::string_view, std::string_view>& files();

}  // namespace akira::embedded
