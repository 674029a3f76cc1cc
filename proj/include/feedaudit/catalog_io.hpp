#pragma once

#include <iosfwd>
#include <string>

#include "feedaudit/catalog.hpp"

namespace feedaudit::catalog {

inline constexpr int kCatalogSchemaVersion = 1;

/// Line-delimited, tab-separated, one kind-tagged record per entity.
void write_catalog(std::ostream& out, const Catalog& catalog);
Catalog read_catalog(std::istream& in, const std::string& source = "<stream>");

void save_catalog(const Catalog& catalog, const std::string& path);
Catalog load_catalog(const std::string& path);

}  // namespace feedaudit::catalog
