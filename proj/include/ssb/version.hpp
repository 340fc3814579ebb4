#pragma once

#define SSB_VERSION "0.1.0"
