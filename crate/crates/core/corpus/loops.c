#include <stdio.h>
#include <unistd.h>

int sum_odd(int n)
{
    int i;
    int total = 0;
    for (i = 0; i < n; i++) {
        if (i % 2 == 0)
            continue;
        total += i;
    }
    return total;
}

int classify(int code)
{
    int kind = 0;
    switch (code) {
    case 0:
        kind = 1;
        break;
    case 1:
    case 2:
        kind = 2;
        break;
    default:
        kind = 3;
    }
    return kind;
}

int retry_read(int fd, char *buf, int len)
{
    int tries = 0;
    int got;
    do {
        got = read(fd, buf, len);
        tries++;
    } while (got < 0 && tries < 3);
    if (got < 0)
        goto fail;
    return got;
fail:
    return -1;
}

int count_lines(const char *path)
{
    FILE *fp;
    int c;
    int lines = 0;
    if ((fp = fopen(path, "r")) == NULL)
        return -1;
    while ((c = fgetc(fp)) != EOF) {
        if (c == '\n')
            lines++;
    }
    fclose(fp);
    return lines;
}
