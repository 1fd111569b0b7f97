#pragma once

#include "nftdisk/analytics.hpp"
#include "nftdisk/core.hpp"
#include "nftdisk/disk_layout.hpp"
#include "nftdisk/fetch.hpp"
#include "nftdisk/flow_layout.hpp"
#include "nftdisk/ingest.hpp"
#include "nftdisk/report.hpp"
#include "nftdisk/seriation.hpp"
#include "nftdisk/serialize.hpp"
#include "nftdisk/server.hpp"
#include "nftdisk/store.hpp"
#include "nftdisk/svg.hpp"
#include "nftdisk/time.hpp"
